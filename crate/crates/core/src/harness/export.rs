//! CSV and JSON persistence for episodes and Monte Carlo summaries.
//!
//! Episode directory:
//! - `steps.csv`: one row per step with the summed trace, the closest agent
//!   pair, every agent's state, applied force and group, and every target's
//!   fused position, trace and true position.
//! - `measurements.csv`: `step, agent_id, target_id, y_x, y_y`.
//! - `estimates.csv`: per-agent posteriors before fusion.
//! - `plans.csv`: every plan with its objective, degraded flag and forces.
//! - `truth.csv`: `step, castaway_id, x, y, z`.
//! - `assignments.csv`: the group each agent tracked per step.
//! - `summary.json`: version, config echo and metrics.
//!
//! Monte Carlo directory: `summary.json`, `runs.csv` and `points.csv`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::SimConfig;
use super::episode::{EpisodeLog, EpisodeMetrics};
use super::montecarlo::{version_string, MonteCarloSummary};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub version: String,
    pub config: SimConfig,
    pub metrics: EpisodeMetrics,
}

impl EpisodeSummary {
    pub fn of(log: &EpisodeLog) -> Self {
        Self {
            version: version_string(),
            config: log.config.clone(),
            metrics: log.metrics.clone(),
        }
    }
}

struct Table {
    path: PathBuf,
    writer: csv::Writer<fs::File>,
}

impl Table {
    fn create(dir: &Path, name: &str, header: &[String]) -> Result<Self> {
        let path = dir.join(name);
        let writer = csv::Writer::from_path(&path).map_err(|source| Error::Csv {
            path: path.clone(),
            source,
        })?;
        let mut t = Self { path, writer };
        t.row(header)?;
        Ok(t)
    }

    fn row<S: AsRef<[u8]>>(&mut self, fields: &[S]) -> Result<()> {
        self.writer.write_record(fields).map_err(|source| Error::Csv {
            path: self.path.clone(),
            source,
        })
    }

    fn finish(mut self) -> Result<()> {
        self.writer.flush().map_err(|e| Error::io(&self.path, e))
    }
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|c| c.to_string()).collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn write_episode(log: &EpisodeLog, dir: &Path) -> Result<()> {
    ensure_dir(dir)?;
    let n = log.config.num_agents;
    let c = log.config.num_castaways;

    let mut cols = header(&["step", "total_trace", "min_distance"]);
    for i in 0..n {
        for f in ["x", "y", "z", "vx", "vy", "vz", "fx", "fy", "fz", "group"] {
            cols.push(format!("agent{i}_{f}"));
        }
    }
    for j in 0..c {
        for f in ["x", "y", "trace", "true_x", "true_y"] {
            cols.push(format!("target{j}_{f}"));
        }
    }
    let mut steps = Table::create(dir, "steps.csv", &cols)?;
    for r in &log.records {
        let mut row = vec![r.step.to_string(), r.total_trace().to_string(), opt(r.min_distance())];
        for (i, (s, p)) in r.agents.iter().zip(&r.plans).enumerate() {
            let u = p.first_control().force;
            row.extend(s.position.iter().chain(s.velocity.iter()).chain(u.iter()).map(f64::to_string));
            row.push(r.assignment.agent_to_group[i].to_string());
        }
        for (est, truth) in r.fused.iter().zip(&r.truths) {
            row.extend(
                [est.mean[0], est.mean[1], est.trace(), truth.position.x, truth.position.y]
                    .iter()
                    .map(f64::to_string),
            );
        }
        steps.row(&row)?;
    }
    steps.finish()?;

    let mut meas = Table::create(dir, "measurements.csv", &header(&["step", "agent_id", "target_id", "y_x", "y_y"]))?;
    for r in &log.records {
        for m in &r.measurements {
            meas.row(&[
                m.step.to_string(),
                m.agent_id.to_string(),
                m.target_id.to_string(),
                m.value.x.to_string(),
                m.value.y.to_string(),
            ])?;
        }
    }
    meas.finish()?;

    let mut ests = Table::create(
        dir,
        "estimates.csv",
        &header(&["step", "agent_id", "target_id", "x", "y", "vx", "vy", "trace"]),
    )?;
    for r in &log.records {
        for (i, bank) in r.local.iter().enumerate() {
            for e in bank {
                let mut row = vec![r.step.to_string(), i.to_string(), e.target_id.to_string()];
                row.extend(e.mean.iter().map(f64::to_string));
                row.push(e.trace().to_string());
                ests.row(&row)?;
            }
        }
    }
    ests.finish()?;

    let horizon = log.config.planner.horizon;
    let mut cols = header(&["step", "agent_id", "objective", "degraded"]);
    for k in 0..horizon {
        for f in ["fx", "fy", "fz"] {
            cols.push(format!("u{k}_{f}"));
        }
    }
    let mut plans = Table::create(dir, "plans.csv", &cols)?;
    for r in &log.records {
        for p in &r.plans {
            let mut row = vec![
                r.step.to_string(),
                p.agent_id.to_string(),
                p.objective.to_string(),
                p.degraded.to_string(),
            ];
            row.extend(p.controls.iter().flat_map(|u| u.force.iter().map(f64::to_string)));
            plans.row(&row)?;
        }
    }
    plans.finish()?;

    let mut truth = Table::create(dir, "truth.csv", &header(&["step", "castaway_id", "x", "y", "z"]))?;
    for r in &log.records {
        for t in &r.truths {
            let mut row = vec![r.step.to_string(), t.id.to_string()];
            row.extend(t.position.iter().map(f64::to_string));
            truth.row(&row)?;
        }
    }
    truth.finish()?;

    let mut assign = Table::create(
        dir,
        "assignments.csv",
        &header(&["step", "agent_id", "group_id", "group_size", "targets"]),
    )?;
    for r in &log.records {
        for i in 0..n {
            let targets: Vec<String> = r.assignment.targets_of(i).iter().map(usize::to_string).collect();
            assign.row(&[
                r.step.to_string(),
                i.to_string(),
                r.assignment.agent_to_group[i].to_string(),
                targets.len().to_string(),
                targets.join(";"),
            ])?;
        }
    }
    assign.finish()?;

    write_json(&dir.join("summary.json"), &EpisodeSummary::of(log))
}

pub fn write_monte_carlo(summary: &MonteCarloSummary, dir: &Path) -> Result<()> {
    ensure_dir(dir)?;
    let mut runs = Table::create(
        dir,
        "runs.csv",
        &header(&[
            "num_agents",
            "num_castaways",
            "run",
            "seed",
            "avg_trace",
            "rmse",
            "min_separation",
            "min_altitude",
            "detections",
            "degraded_plans",
            "limit_violations",
        ]),
    )?;
    for r in &summary.rows {
        let m = &r.metrics;
        runs.row(&[
            r.num_agents.to_string(),
            r.num_castaways.to_string(),
            r.run.to_string(),
            r.seed.to_string(),
            m.avg_trace.to_string(),
            m.rmse.to_string(),
            opt(m.min_separation),
            m.min_altitude.to_string(),
            m.detections.to_string(),
            m.degraded_plans.to_string(),
            m.limit_violations.to_string(),
        ])?;
    }
    runs.finish()?;

    let mut points = Table::create(
        dir,
        "points.csv",
        &header(&[
            "num_agents",
            "num_castaways",
            "runs",
            "mean_avg_trace",
            "std_avg_trace",
            "mean_rmse",
            "std_rmse",
            "min_separation",
            "min_altitude",
            "degraded_plans",
            "limit_violations",
        ]),
    )?;
    for p in &summary.points {
        points.row(&[
            p.num_agents.to_string(),
            p.num_castaways.to_string(),
            p.runs.to_string(),
            p.mean_avg_trace.to_string(),
            p.std_avg_trace.to_string(),
            p.mean_rmse.to_string(),
            p.std_rmse.to_string(),
            opt(p.min_separation),
            p.min_altitude.to_string(),
            p.degraded_plans.to_string(),
            p.limit_violations.to_string(),
        ])?;
    }
    points.finish()?;

    write_json(&dir.join("summary.json"), summary)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn read_episode_summary(path: &Path) -> Result<EpisodeSummary> {
    read_json(path)
}

pub fn read_monte_carlo_summary(path: &Path) -> Result<MonteCarloSummary> {
    read_json(path)
}
