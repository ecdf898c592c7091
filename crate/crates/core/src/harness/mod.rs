//! Episode and Monte Carlo orchestration, metrics, configuration and
//! persistence.

pub mod config;
pub mod episode;
pub mod export;
pub mod montecarlo;

pub use config::SimConfig;
pub use episode::{place, run_episode, run_episode_with_bus, EpisodeLog, EpisodeMetrics, Scenario, StepRecord};
pub use export::{read_episode_summary, read_monte_carlo_summary, write_episode, write_monte_carlo, EpisodeSummary};
pub use montecarlo::{aggregate, run_monte_carlo, version_string, MonteCarloSummary, RunRow, SweepPoint};
