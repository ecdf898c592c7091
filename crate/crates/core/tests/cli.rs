use std::path::Path;
use std::process::{Command, Output};

use swarmtrack::harness::{read_episode_summary, read_monte_carlo_summary};

fn swarmtrack(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swarmtrack"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn swarmtrack")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn simulate_writes_tables_and_bus_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"duration": 12, "num_agents": 2}"#);
    let out = dir.path().join("run");
    let res = swarmtrack(&["simulate", "--config", &cfg, "--seed", "3", "--trace-bus"], &out);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    for name in [
        "steps.csv",
        "measurements.csv",
        "estimates.csv",
        "plans.csv",
        "truth.csv",
        "assignments.csv",
        "summary.json",
        "bus.jsonl",
    ] {
        assert!(out.join(name).is_file(), "missing {name}");
    }
    let summary = read_episode_summary(&out.join("summary.json")).unwrap();
    assert_eq!(summary.config.seed, 3);
    assert_eq!(summary.metrics.steps, 12);

    let trace = std::fs::read_to_string(out.join("bus.jsonl")).unwrap();
    let kinds: Vec<String> = trace
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["kind"].as_str().unwrap().to_owned())
        .collect();
    // per step: two estimate snapshots and two plans
    assert_eq!(kinds.len(), 12 * 4);
    assert!(kinds.iter().any(|k| k == "plan"));
    assert!(kinds.iter().any(|k| k == "estimate-snapshot"));

    let plans = std::fs::read_to_string(out.join("plans.csv")).unwrap();
    let header: Vec<&str> = plans.lines().next().unwrap().split(',').collect();
    assert_eq!(&header[..4], ["step", "agent_id", "objective", "degraded"]);
    assert_eq!(header.len(), 4 + 3 * 3);
    assert_eq!(plans.lines().count(), 1 + 12 * 2);
}

#[test]
fn montecarlo_sweeps_requested_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"duration": 8}"#);
    let out = dir.path().join("mc");
    let res = swarmtrack(
        &["montecarlo", "--config", &cfg, "--runs", "2", "--sweep-agents", "1,2", "--sweep-targets", "2"],
        &out,
    );
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let summary = read_monte_carlo_summary(&out.join("summary.json")).unwrap();
    assert_eq!(summary.runs, 2);
    assert_eq!(summary.rows.len(), 4);
    let grid: Vec<(usize, usize)> = summary.points.iter().map(|p| (p.num_agents, p.num_castaways)).collect();
    assert_eq!(grid, [(1, 2), (2, 2)]);
    assert!(out.join("runs.csv").is_file() && out.join("points.csv").is_file());
}

#[test]
fn invalid_config_exits_nonzero_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"num_agents": 0, "planner": {"horizon": 0}}"#);
    let res = swarmtrack(&["simulate", "--config", &cfg], &dir.path().join("x"));
    assert!(!res.status.success());
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("num_agents"), "{err}");
    assert!(err.contains("planner.horizon"), "{err}");
}

#[test]
fn unknown_key_and_missing_file_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"num_agent": 2}"#);
    let res = swarmtrack(&["simulate", "--config", &cfg], &dir.path().join("x"));
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("num_agent"));

    let res = swarmtrack(&["simulate", "--config", "/nonexistent/cfg.json"], &dir.path().join("y"));
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).starts_with("error:"));
}

#[test]
fn zero_runs_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let res = swarmtrack(&["montecarlo", "--runs", "0"], dir.path());
    assert!(!res.status.success());
}
