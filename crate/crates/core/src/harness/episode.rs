use std::f64::consts::TAU;

use nalgebra::{Matrix2, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::config::SimConfig;
use crate::clustering::{self, ClusterAssignment};
use crate::coordination::{self, InProcessBus, MessageBus};
use crate::error::{Error, Result};
use crate::estimation::{self, FilterParams, TargetEstimate};
use crate::planner::{self, Plan, PlanningProblem};
use crate::sea::{self, CastawayTruth, TruthTable};
use crate::sensing::{self, Measurement, SensorModel};
use crate::vehicle::{self, AgentState};

/// RNG stream reserved for scenario placement; agent `i` senses on stream
/// `AGENT_STREAM_BASE + i`.
const PLACEMENT_STREAM: u64 = 0;
const AGENT_STREAM_BASE: u64 = 1;
const MAX_PLACEMENT_ATTEMPTS: usize = 100_000;

/// Everything that happened during one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub truths: Vec<CastawayTruth>,
    /// Agent states at the start of the step, used for sensing and planning.
    pub agents: Vec<AgentState>,
    pub measurements: Vec<Measurement>,
    /// Per-agent posteriors before fusion, indexed by agent.
    pub local: Vec<Vec<TargetEstimate>>,
    /// Fused bank, ascending target id.
    pub fused: Vec<TargetEstimate>,
    pub assignment: ClusterAssignment,
    /// Plans made this step, indexed by agent; the head control of each is
    /// applied.
    pub plans: Vec<Plan>,
    /// Pairwise agent distances `(i, j)` for `i < j`, row-major.
    pub distances: Vec<f64>,
}

impl StepRecord {
    pub fn total_trace(&self) -> f64 {
        self.fused.iter().map(TargetEstimate::trace).sum()
    }

    pub fn min_distance(&self) -> Option<f64> {
        self.distances.iter().copied().reduce(f64::min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub steps: usize,
    /// Time average of the summed fused covariance trace.
    pub avg_trace: f64,
    /// Position RMSE of the fused estimate, per target.
    pub target_rmse: Vec<f64>,
    /// Mean of `target_rmse`.
    pub rmse: f64,
    /// Smallest pairwise agent distance; `None` with a single agent.
    pub min_separation: Option<f64>,
    pub min_altitude: f64,
    pub max_altitude: f64,
    pub detections: usize,
    pub degraded_plans: usize,
    /// Vehicle limit violations over all logged states and applied controls.
    pub limit_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub config: SimConfig,
    pub records: Vec<StepRecord>,
    /// Agent states after the last applied control.
    pub final_agents: Vec<AgentState>,
    pub metrics: EpisodeMetrics,
}

/// Initial conditions drawn from the placement stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub castaways: Vec<Vector3<f64>>,
    pub agents: Vec<AgentState>,
    pub reports: Vec<Vector2<f64>>,
}

fn in_disk<R: Rng>(rng: &mut R, centre: Vector2<f64>, radius: f64) -> Vector2<f64> {
    let r = radius * rng.gen::<f64>().sqrt();
    let theta = TAU * rng.gen::<f64>();
    centre + Vector2::new(r * theta.cos(), r * theta.sin())
}

/// Castaways uniform in a disk around the incident point; agents uniform in
/// a disk around the castaway centroid at the initial altitude, redrawn until
/// pairwise separation holds; reports are truth plus Gaussian noise.
pub fn place(cfg: &SimConfig) -> Result<Scenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(PLACEMENT_STREAM);
    let incident = Vector2::from(cfg.incident_point);
    let castaways: Vec<Vector3<f64>> = (0..cfg.num_castaways)
        .map(|_| {
            let p = in_disk(&mut rng, incident, cfg.castaway_spread);
            Vector3::new(p.x, p.y, 0.0)
        })
        .collect();
    let centroid = castaways.iter().map(|c| c.xy()).sum::<Vector2<f64>>() / castaways.len() as f64;

    let mut agents: Vec<AgentState> = Vec::with_capacity(cfg.num_agents);
    let mut attempts = 0;
    while agents.len() < cfg.num_agents {
        attempts += 1;
        if attempts > MAX_PLACEMENT_ATTEMPTS {
            return Err(Error::param("agent_spawn_radius", "could not place agents apart"));
        }
        let p = in_disk(&mut rng, centroid, cfg.agent_spawn_radius);
        let candidate = AgentState::at_rest(Vector3::new(p.x, p.y, cfg.initial_altitude));
        if agents
            .iter()
            .all(|a| a.distance_to(&candidate) >= cfg.planner.safety_distance)
        {
            agents.push(candidate);
        }
    }

    let reports = if cfg.report_noise > 0.0 {
        let noise = Normal::new(0.0, cfg.report_noise).map_err(|e| Error::param("report_noise", e.to_string()))?;
        castaways
            .iter()
            .map(|c| Vector2::new(c.x + noise.sample(&mut rng), c.y + noise.sample(&mut rng)))
            .collect()
    } else {
        castaways.iter().map(|c| c.xy()).collect()
    };
    Ok(Scenario {
        castaways,
        agents,
        reports,
    })
}

fn pairwise(agents: &[AgentState]) -> Vec<f64> {
    let mut out = Vec::with_capacity(agents.len() * agents.len().saturating_sub(1) / 2);
    for i in 0..agents.len() {
        for j in i + 1..agents.len() {
            out.push(agents[i].distance_to(&agents[j]));
        }
    }
    out
}

pub fn run_episode(cfg: &SimConfig) -> Result<EpisodeLog> {
    run_episode_with_bus(cfg, &InProcessBus::new())
}

/// Runs one episode, exchanging estimates and plans over `bus`.
pub fn run_episode_with_bus(cfg: &SimConfig, bus: &dyn MessageBus) -> Result<EpisodeLog> {
    let cfg = cfg.clone().validated()?;
    let dt = cfg.vehicle.dt;
    let steps = cfg.steps()?;
    let n = cfg.num_agents;
    let waves = cfg.wave_sources()?;
    let scenario = place(&cfg)?;
    let truth = sea::generate_truth(&waves, &scenario.castaways, cfg.duration, dt)?;
    let filter = FilterParams::from_config(dt, &cfg.filter);
    let sensor = SensorModel {
        camera: &cfg.camera,
        detection: &cfg.detection,
        zeta: cfg.measurement_noise_scale,
    };
    let mut rngs: Vec<ChaCha8Rng> = (0..n)
        .map(|i| {
            let mut r = ChaCha8Rng::seed_from_u64(cfg.seed);
            r.set_stream(AGENT_STREAM_BASE + i as u64);
            r
        })
        .collect();

    let initial: Vec<TargetEstimate> = scenario
        .reports
        .iter()
        .enumerate()
        .map(|(j, xy)| TargetEstimate::from_report(j, *xy, cfg.filter.initial_covariance))
        .collect();
    let mut banks = vec![initial; n];
    let mut agents = scenario.agents.clone();
    let mut plans: Vec<Plan> = agents
        .iter()
        .enumerate()
        .map(|(i, s)| Plan::hover(i, *s, cfg.planner.horizon, 0, &cfg.vehicle))
        .collect();

    let mut records = Vec::with_capacity(steps);
    for k in 1..=steps {
        let truths = truth.at(k);
        let mut measurements = Vec::new();
        for i in 0..n {
            let seen = sensing::sense(i, &agents[i], truths, &sensor, k, &mut rngs[i]);
            for est in banks[i].iter_mut() {
                let prior = estimation::predict(est, &filter);
                *est = match seen.iter().find(|m| m.target_id == est.target_id) {
                    Some(m) => {
                        let r = Matrix2::identity() * (m.noise_std * m.noise_std);
                        estimation::update(&prior, &m.value, &r, &filter)?
                    }
                    None => estimation::update_missed(&prior),
                };
            }
            measurements.extend(seen);
        }
        let local = banks.clone();
        let fused = coordination::exchange_and_fuse(bus, &banks, k)?;
        coordination::install(&mut banks, &fused);

        let assignment = clustering::cluster_and_assign(&fused, &filter, &agents, &cfg.clustering);
        let targets: Vec<Vec<TargetEstimate>> = (0..n)
            .map(|i| {
                assignment
                    .targets_of(i)
                    .iter()
                    .filter_map(|id| fused.iter().find(|e| e.target_id == *id).copied())
                    .collect()
            })
            .collect();
        let problems: Vec<PlanningProblem<'_>> = (0..n)
            .map(|i| PlanningProblem {
                agent_id: i,
                state: agents[i],
                step: k,
                targets: &targets[i],
                others: &[],
                config: &cfg.planner,
                vehicle: &cfg.vehicle,
                filter: &filter,
                camera: &cfg.camera,
                detection: &cfg.detection,
            })
            .collect();
        let order = coordination::planning_order(n, k, &cfg.coordination);
        plans = coordination::planning_round(bus, &problems, &plans, &order, planner::solve)?;

        let distances = pairwise(&agents);
        let current = std::mem::replace(&mut agents, plans.iter().map(|p| p.states[1]).collect());
        records.push(StepRecord {
            step: k,
            truths: truths.to_vec(),
            agents: current,
            measurements,
            local,
            fused,
            assignment,
            plans: plans.clone(),
            distances,
        });
    }

    let metrics = summarize(&cfg, &truth, &records, &agents);
    Ok(EpisodeLog {
        config: cfg,
        records,
        final_agents: agents,
        metrics,
    })
}

fn summarize(cfg: &SimConfig, truth: &TruthTable, records: &[StepRecord], final_agents: &[AgentState]) -> EpisodeMetrics {
    let steps = records.len();
    let denom = steps.max(1) as f64;
    let avg_trace = records.iter().map(StepRecord::total_trace).sum::<f64>() / denom;

    let mut sq = vec![0.0; cfg.num_castaways];
    for r in records {
        for est in &r.fused {
            let actual = truth.at(r.step)[est.target_id].position.xy();
            sq[est.target_id] += (est.position() - actual).norm_squared();
        }
    }
    let target_rmse: Vec<f64> = sq.iter().map(|s| (s / denom).sqrt()).collect();
    let rmse = target_rmse.iter().sum::<f64>() / target_rmse.len().max(1) as f64;

    let min_separation = records
        .iter()
        .filter_map(StepRecord::min_distance)
        .chain(pairwise(final_agents))
        .reduce(f64::min);
    let altitudes = records
        .iter()
        .flat_map(|r| r.agents.iter())
        .chain(final_agents)
        .map(AgentState::altitude);
    let (min_altitude, max_altitude) = altitudes.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), z| (lo.min(z), hi.max(z)));

    let mut limit_violations = 0;
    for r in records {
        for (state, plan) in r.agents.iter().zip(&r.plans) {
            limit_violations += vehicle::validate(state, &plan.first_control(), &cfg.vehicle).len();
        }
    }
    limit_violations += final_agents
        .iter()
        .filter(|s| !cfg.vehicle.state_within_limits(s))
        .count();

    EpisodeMetrics {
        steps,
        avg_trace,
        target_rmse,
        rmse,
        min_separation,
        min_altitude,
        max_altitude,
        detections: records.iter().map(|r| r.measurements.len()).sum(),
        degraded_plans: records
            .iter()
            .flat_map(|r| r.plans.iter())
            .filter(|p| p.degraded)
            .count(),
        limit_violations,
    }
}
