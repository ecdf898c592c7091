use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::SimConfig;
use super::episode::{run_episode, EpisodeMetrics};
use crate::error::{Error, Result};

/// One episode of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub num_agents: usize,
    pub num_castaways: usize,
    pub run: usize,
    pub seed: u64,
    pub metrics: EpisodeMetrics,
}

/// Aggregate over all runs sharing a fleet size and castaway count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub num_agents: usize,
    pub num_castaways: usize,
    pub runs: usize,
    pub mean_avg_trace: f64,
    pub std_avg_trace: f64,
    pub mean_rmse: f64,
    pub std_rmse: f64,
    pub min_separation: Option<f64>,
    pub min_altitude: f64,
    pub degraded_plans: usize,
    pub limit_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub version: String,
    pub config: SimConfig,
    /// Episodes per sweep point; zero marks an empty summary.
    pub runs: usize,
    pub points: Vec<SweepPoint>,
    pub rows: Vec<RunRow>,
}

pub fn version_string() -> String {
    format!("v{}", env!("CARGO_PKG_VERSION"))
}

impl MonteCarloSummary {
    pub fn empty(config: SimConfig) -> Self {
        Self {
            version: version_string(),
            config,
            runs: 0,
            points: Vec::new(),
            rows: Vec::new(),
        }
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Groups rows by `(agents, castaways)` and aggregates each group in run
/// order, so the result does not depend on the order rows arrive in.
pub fn aggregate(rows: &[RunRow]) -> Vec<SweepPoint> {
    let mut sorted: Vec<&RunRow> = rows.iter().collect();
    sorted.sort_by_key(|r| (r.num_agents, r.num_castaways, r.run));
    let mut points = Vec::new();
    for group in sorted.chunk_by(|a, b| (a.num_agents, a.num_castaways) == (b.num_agents, b.num_castaways)) {
        let traces: Vec<f64> = group.iter().map(|r| r.metrics.avg_trace).collect();
        let rmses: Vec<f64> = group.iter().map(|r| r.metrics.rmse).collect();
        let (mean_avg_trace, std_avg_trace) = mean_std(&traces);
        let (mean_rmse, std_rmse) = mean_std(&rmses);
        points.push(SweepPoint {
            num_agents: group[0].num_agents,
            num_castaways: group[0].num_castaways,
            runs: group.len(),
            mean_avg_trace,
            std_avg_trace,
            mean_rmse,
            std_rmse,
            min_separation: group.iter().filter_map(|r| r.metrics.min_separation).reduce(f64::min),
            min_altitude: group.iter().map(|r| r.metrics.min_altitude).fold(f64::INFINITY, f64::min),
            degraded_plans: group.iter().map(|r| r.metrics.degraded_plans).sum(),
            limit_violations: group.iter().map(|r| r.metrics.limit_violations).sum(),
        });
    }
    points
}

/// Runs `runs` episodes for every combination of `agents` and `castaways`
/// (an empty list means the base config's value). Run `i` uses seed
/// `cfg.seed + i` at every sweep point.
pub fn run_monte_carlo(cfg: &SimConfig, runs: usize, agents: &[usize], castaways: &[usize]) -> Result<MonteCarloSummary> {
    if runs == 0 {
        return Err(Error::param("runs", "must be >= 1"));
    }
    let agents = if agents.is_empty() { vec![cfg.num_agents] } else { agents.to_vec() };
    let castaways = if castaways.is_empty() { vec![cfg.num_castaways] } else { castaways.to_vec() };
    let mut jobs = Vec::new();
    for &n in &agents {
        for &c in &castaways {
            let point = SimConfig {
                num_agents: n,
                num_castaways: c,
                ..cfg.clone()
            }
            .validated()?;
            for run in 0..runs {
                jobs.push((point.clone(), run));
            }
        }
    }
    let rows: Vec<RunRow> = jobs
        .into_par_iter()
        .map(|(point, run)| {
            let seed = cfg.seed.wrapping_add(run as u64);
            let log = run_episode(&SimConfig { seed, ..point })?;
            Ok(RunRow {
                num_agents: log.config.num_agents,
                num_castaways: log.config.num_castaways,
                run,
                seed,
                metrics: log.metrics,
            })
        })
        .collect::<Result<_>>()?;
    Ok(MonteCarloSummary {
        version: version_string(),
        config: cfg.clone(),
        runs,
        points: aggregate(&rows),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> SimConfig {
        SimConfig {
            duration: 20.0,
            num_agents: 2,
            num_castaways: 2,
            seed: 40,
            ..Default::default()
        }
    }

    #[test]
    fn single_run_matches_episode() {
        let cfg = base();
        let summary = run_monte_carlo(&cfg, 1, &[], &[]).unwrap();
        let episode = run_episode(&cfg).unwrap().metrics;
        let p = &summary.points[0];
        assert_eq!(p.runs, 1);
        assert_eq!(p.mean_avg_trace, episode.avg_trace);
        assert_eq!(p.mean_rmse, episode.rmse);
        assert_eq!(p.min_separation, episode.min_separation);
        assert_eq!(summary.rows[0].metrics, episode);
    }

    #[test]
    fn worker_order_does_not_matter() {
        let summary = run_monte_carlo(&base(), 3, &[1, 2], &[]).unwrap();
        let mut shuffled = summary.rows.clone();
        shuffled.reverse();
        shuffled.swap(0, 2);
        assert_eq!(aggregate(&shuffled), summary.points);
        // sequential recomputation gives the same rows
        for row in &summary.rows {
            let cfg = SimConfig {
                num_agents: row.num_agents,
                seed: row.seed,
                ..base()
            };
            assert_eq!(run_episode(&cfg).unwrap().metrics, row.metrics);
        }
    }

    #[test]
    fn sweep_covers_grid() {
        let summary = run_monte_carlo(&base(), 2, &[1, 2], &[1, 2]).unwrap();
        let keys: Vec<(usize, usize)> = summary.points.iter().map(|p| (p.num_agents, p.num_castaways)).collect();
        assert_eq!(keys, vec![(1, 1), (1, 2), (2, 1), (2, 2)]);
        assert_eq!(summary.rows.len(), 8);
        assert_eq!(summary.points[0].min_separation, None);
    }

    #[test]
    fn zero_runs_rejected() {
        assert!(run_monte_carlo(&base(), 0, &[], &[]).is_err());
    }

    #[test]
    fn spread_statistics() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[7.0]), (7.0, 0.0));
    }
}
