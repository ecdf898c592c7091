//! Receding-horizon controller for a single agent.
//!
//! The objective of a candidate control sequence is the summed covariance
//! trace of the agent's cluster targets over the horizon. It is computed by
//! rolling the agent forward, predicting every target, and applying a
//! pseudomeasurement update for each agent (others in ascending id, then this
//! agent) whose footprint is predicted to contain the target. Pseudomeasurements
//! equal the predicted mean, so target means stay on their open-loop path and
//! only the covariances depend on the candidate.
//!
//! The search enumerates a per-axis acceleration lattice over the horizon
//! depth-first, pruning branches that violate vehicle limits, the workspace
//! or the separation distance at any step.

use std::cmp::Ordering;

use nalgebra::{Matrix2, Matrix4, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::FieldError;
use crate::estimation::{self, FilterParams, TargetEstimate};
use crate::sensing::{CameraSpec, DetectionProfile};
use crate::vehicle::{self, AgentState, ControlInput, VehicleParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlannerConfig {
    /// Horizon length `K` (steps).
    pub horizon: usize,
    /// Minimum separation `d_t` between agents (m).
    pub safety_distance: f64,
    /// Scale `λ` of the planning noise standard deviation (m).
    pub noise_scale: f64,
    /// Lower clamp of the altitude ramp `r(z)`.
    pub r_floor: f64,
    /// Per-axis acceleration levels (m/s²) forming the control lattice.
    pub lattice: Vec<f64>,
    /// Upper bound on the number of enumerated control sequences.
    pub candidate_budget: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            horizon: 3,
            safety_distance: 2.5,
            noise_scale: 2.0,
            r_floor: 0.05,
            lattice: vec![-7.0, 0.0, 7.0],
            candidate_budget: 19_683,
        }
    }
}

impl PlannerConfig {
    pub fn check(&self, vehicle: &VehicleParams) -> Vec<FieldError> {
        let mut errs = Vec::new();
        if self.horizon == 0 {
            errs.push(FieldError::new("planner.horizon", "must be >= 1"));
        }
        if !(self.safety_distance.is_finite() && self.safety_distance > 0.0) {
            errs.push(FieldError::new("planner.safety_distance", "must be > 0"));
        }
        if !(self.noise_scale.is_finite() && self.noise_scale > 0.0) {
            errs.push(FieldError::new("planner.noise_scale", "must be > 0"));
        }
        if !(self.r_floor > 0.0 && self.r_floor <= 1.0) {
            errs.push(FieldError::new("planner.r_floor", "must lie in (0, 1]"));
        }
        if self.lattice.is_empty() {
            errs.push(FieldError::new("planner.lattice", "must not be empty"));
        }
        if self
            .lattice
            .iter()
            .any(|a| !(a.is_finite() && a.abs() <= vehicle.max_acceleration))
        {
            errs.push(FieldError::new(
                "planner.lattice",
                format!("levels must lie within +/-{} m/s^2", vehicle.max_acceleration),
            ));
        }
        let per_step = self.lattice.len().saturating_pow(3);
        let total = u32::try_from(self.horizon)
            .ok()
            .and_then(|k| per_step.checked_pow(k));
        if total.is_none_or(|t| t > self.candidate_budget) {
            errs.push(FieldError::new(
                "planner.candidate_budget",
                format!(
                    "{}^{} candidates exceed the budget of {}",
                    per_step, self.horizon, self.candidate_budget
                ),
            ));
        }
        errs
    }
}

/// A control sequence with the agent trajectory it produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub agent_id: usize,
    pub controls: Vec<ControlInput>,
    /// `states[0]` is the state the plan starts from; `states[k + 1]` follows
    /// from `controls[k]`.
    pub states: Vec<AgentState>,
    pub objective: f64,
    pub created_step: usize,
    /// Set when no candidate satisfied every constraint.
    pub degraded: bool,
}

impl Plan {
    /// Zero-force plan starting at `state`.
    pub fn hover(
        agent_id: usize,
        state: AgentState,
        horizon: usize,
        created_step: usize,
        vehicle: &VehicleParams,
    ) -> Plan {
        let controls = vec![ControlInput::ZERO; horizon];
        Plan {
            agent_id,
            states: trajectory(&state, &controls, vehicle),
            controls,
            objective: 0.0,
            created_step,
            degraded: false,
        }
    }

    pub fn horizon(&self) -> usize {
        self.controls.len()
    }

    pub fn first_control(&self) -> ControlInput {
        self.controls.first().copied().unwrap_or(ControlInput::ZERO)
    }

    /// Predicted state at absolute time index `step`. Past the end of the plan
    /// the agent is assumed to hover at its last planned position.
    pub fn predicted_state(&self, step: usize) -> AgentState {
        let idx = step.saturating_sub(self.created_step);
        match self.states.get(idx) {
            Some(s) => *s,
            None => AgentState::at_rest(self.states.last().expect("plan has states").position),
        }
    }
}

/// States visited by applying `controls` from `start` (including `start`).
pub fn trajectory(start: &AgentState, controls: &[ControlInput], vehicle: &VehicleParams) -> Vec<AgentState> {
    let mut states = Vec::with_capacity(controls.len() + 1);
    states.push(*start);
    for u in controls {
        let next = vehicle::step(states.last().unwrap(), u, vehicle);
        states.push(next);
    }
    states
}

/// Per-side footprint inclusion tests and their aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FovBoundaryCheck {
    /// Left, right, bottom, top.
    pub sides: [bool; 4],
    pub sum: u8,
    pub inside: bool,
}

/// Evaluates the four half-plane tests of the footprint. Side κ has half
/// extent `z·tan(θ_κ)`, with `θ_κ = θ/2` for left/right and `φ/2` for
/// bottom/top; lower sides test the negated offset so that every side reads
/// `E_κ·p ≤ d_κ`.
pub fn fov_binaries(agent: &AgentState, target_xy: &Vector2<f64>, cam: &CameraSpec) -> FovBoundaryCheck {
    let (hx, hy) = cam.half_extents(agent.position.z);
    let dx = target_xy.x - agent.position.x;
    let dy = target_xy.y - agent.position.y;
    let sides = [-dx <= hx, dx <= hx, -dy <= hy, dy <= hy];
    let sum = sides.iter().filter(|b| **b).count() as u8;
    FovBoundaryCheck {
        sides,
        sum,
        inside: sum == 4,
    }
}

/// Altitude ramp `r(z)` sharing its breakpoints with the detection profile.
pub fn noise_ramp(z: f64, cfg: &PlannerConfig, prof: &DetectionProfile) -> f64 {
    ((z - prof.alpha1()) / (prof.alpha2() - prof.alpha1())).clamp(cfg.r_floor, 1.0)
}

/// Planning noise standard deviation `σ = λ r(z)` and covariance `σ² I`.
pub fn planning_noise(z: f64, cfg: &PlannerConfig, prof: &DetectionProfile) -> (f64, Matrix2<f64>) {
    let sigma = cfg.noise_scale * noise_ramp(z, cfg, prof);
    (sigma, Matrix2::identity() * (sigma * sigma))
}

/// Everything one agent needs to plan.
#[derive(Debug, Clone, Copy)]
pub struct PlanningProblem<'a> {
    pub agent_id: usize,
    pub state: AgentState,
    /// Time index the plan starts at.
    pub step: usize,
    /// Fused estimates of the agent's cluster targets.
    pub targets: &'a [TargetEstimate],
    /// Latest known plans of the other agents, in any order.
    pub others: &'a [Plan],
    pub config: &'a PlannerConfig,
    pub vehicle: &'a VehicleParams,
    pub filter: &'a FilterParams,
    pub camera: &'a CameraSpec,
    pub detection: &'a DetectionProfile,
}

/// Candidate-independent quantities over the horizon. Index `k - 1` holds
/// values for horizon step `k`.
struct Horizon {
    /// Open-loop predicted target positions per step.
    target_xy: Vec<Vec<Vector2<f64>>>,
    /// Other agents' predicted states per step, ascending agent id.
    others: Vec<Vec<AgentState>>,
    /// For each step, the ordered list of (target index, noise) updates
    /// contributed by other agents.
    other_updates: Vec<Vec<(usize, Matrix2<f64>)>>,
}

impl Horizon {
    fn new(problem: &PlanningProblem<'_>) -> Self {
        let k_max = problem.config.horizon;
        let mut others: Vec<&Plan> = problem
            .others
            .iter()
            .filter(|p| p.agent_id != problem.agent_id)
            .collect();
        others.sort_by_key(|p| p.agent_id);

        let mut means: Vec<_> = problem.targets.iter().map(|t| t.mean).collect();
        let mut target_xy = Vec::with_capacity(k_max);
        let mut other_states = Vec::with_capacity(k_max);
        let mut other_updates = Vec::with_capacity(k_max);
        for k in 1..=k_max {
            for m in &mut means {
                *m = problem.filter.transition * *m;
            }
            let xy: Vec<Vector2<f64>> = means.iter().map(|m| Vector2::new(m[0], m[1])).collect();
            let states: Vec<AgentState> = others
                .iter()
                .map(|p| p.predicted_state(problem.step + k))
                .collect();
            let mut updates = Vec::new();
            for (j, t) in xy.iter().enumerate() {
                for s in &states {
                    if fov_binaries(s, t, problem.camera).inside {
                        let (_, r) = planning_noise(s.position.z, problem.config, problem.detection);
                        updates.push((j, r));
                    }
                }
            }
            target_xy.push(xy);
            other_states.push(states);
            other_updates.push(updates);
        }
        Self {
            target_xy,
            others: other_states,
            other_updates,
        }
    }

    /// Covariances after horizon step `k` given this agent's state at `k`,
    /// together with their summed trace.
    fn advance(
        &self,
        problem: &PlanningProblem<'_>,
        k: usize,
        own: &AgentState,
        covs: &[Matrix4<f64>],
    ) -> (Vec<Matrix4<f64>>, f64) {
        let filter = problem.filter;
        let mut next: Vec<Matrix4<f64>> = covs
            .iter()
            .map(|p| estimation::predict_covariance(p, filter))
            .collect();
        for (j, r) in &self.other_updates[k - 1] {
            if let Some(p) = estimation::update_covariance(&next[*j], r, filter) {
                next[*j] = p;
            }
        }
        let (_, r_own) = planning_noise(own.position.z, problem.config, problem.detection);
        for (p, t) in next.iter_mut().zip(&self.target_xy[k - 1]) {
            if fov_binaries(own, t, problem.camera).inside {
                if let Some(post) = estimation::update_covariance(p, &r_own, filter) {
                    *p = post;
                }
            }
        }
        let total = next.iter().fold(0.0, |acc, p| acc + p.trace());
        (next, total)
    }

    fn separated(&self, problem: &PlanningProblem<'_>, k: usize, own: &AgentState) -> bool {
        self.others[k - 1]
            .iter()
            .all(|o| own.distance_to(o) >= problem.config.safety_distance)
    }

    fn min_separation(&self, k: usize, own: &AgentState) -> f64 {
        self.others[k - 1]
            .iter()
            .map(|o| own.distance_to(o))
            .fold(f64::INFINITY, f64::min)
    }
}

/// The position one step past the horizon if the agent coasts, which must
/// stay in the workspace so that the next round has a way to brake.
fn coasting_ok(state: &AgentState, vehicle: &VehicleParams) -> bool {
    let p: Vector3<f64> = state.position + state.velocity * vehicle.dt;
    p.z >= vehicle.min_altitude - vehicle::LIMIT_TOLERANCE && vehicle.workspace.contains(&p)
}

fn vehicle_ok(k: usize, state: &AgentState, problem: &PlanningProblem<'_>) -> bool {
    problem.vehicle.state_within_limits(state)
        && (k < problem.config.horizon || coasting_ok(state, problem.vehicle))
}

/// Objective of a control sequence.
pub fn rollout(problem: &PlanningProblem<'_>, controls: &[ControlInput]) -> f64 {
    let horizon = Horizon::new(problem);
    rollout_with(&horizon, problem, controls)
}

fn rollout_with(horizon: &Horizon, problem: &PlanningProblem<'_>, controls: &[ControlInput]) -> f64 {
    let mut state = problem.state;
    let mut covs: Vec<Matrix4<f64>> = problem.targets.iter().map(|t| t.covariance).collect();
    let mut objective = 0.0;
    for (k, u) in controls.iter().enumerate().take(problem.config.horizon) {
        state = vehicle::step(&state, u, problem.vehicle);
        let (next, total) = horizon.advance(problem, k + 1, &state, &covs);
        covs = next;
        objective += total;
    }
    objective
}

/// Whether the trajectory `states` (with `states[0]` the current state)
/// produced by `controls` satisfies the vehicle limits, the workspace and
/// the separation distance at every horizon step.
pub fn feasible(problem: &PlanningProblem<'_>, states: &[AgentState], controls: &[ControlInput]) -> bool {
    let horizon = Horizon::new(problem);
    feasible_with(&horizon, problem, states, controls)
}

fn feasible_with(
    horizon: &Horizon,
    problem: &PlanningProblem<'_>,
    states: &[AgentState],
    controls: &[ControlInput],
) -> bool {
    controls.iter().all(|u| problem.vehicle.control_within_limits(u))
        && states.iter().enumerate().skip(1).all(|(k, s)| {
            vehicle_ok(k, s, problem) && horizon.separated(problem, k, s)
        })
}

/// Total ordering used to pick among candidates: objective, then control
/// effort, then lexicographic order of the flattened forces.
pub fn compare_candidates(
    a: (f64, f64, &[ControlInput]),
    b: (f64, f64, &[ControlInput]),
) -> Ordering {
    a.0.total_cmp(&b.0)
        .then(a.1.total_cmp(&b.1))
        .then_with(|| {
            let fa = a.2.iter().flat_map(|u| u.force.iter().copied());
            let fb = b.2.iter().flat_map(|u| u.force.iter().copied());
            fa.zip(fb)
                .map(|(x, y)| x.total_cmp(&y))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
}

/// Lattice of per-step controls in lexicographic (x, y, z) order.
pub fn control_lattice(cfg: &PlannerConfig, vehicle: &VehicleParams) -> Vec<ControlInput> {
    let mut levels = cfg.lattice.clone();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let mut out = Vec::with_capacity(levels.len().pow(3));
    for &ax in &levels {
        for &ay in &levels {
            for &az in &levels {
                out.push(ControlInput::new(ax * vehicle.mass, ay * vehicle.mass, az * vehicle.mass));
            }
        }
    }
    out
}

#[derive(Clone, Copy, PartialEq)]
enum Mode {
    /// Every constraint enforced; minimise the objective.
    Strict,
    /// Separation dropped; maximise the smallest separation.
    SafestWithinLimits,
    /// Nothing enforced; maximise the smallest separation.
    Safest,
}

struct Best {
    objective: f64,
    effort: f64,
    clearance: f64,
    controls: Vec<ControlInput>,
    states: Vec<AgentState>,
}

struct Search<'p, 'a> {
    problem: &'p PlanningProblem<'a>,
    horizon: Horizon,
    lattice: Vec<ControlInput>,
    mode: Mode,
    controls: Vec<ControlInput>,
    states: Vec<AgentState>,
    best: Option<Best>,
}

impl<'p, 'a> Search<'p, 'a> {
    fn admissible(&self, k: usize, s: &AgentState) -> bool {
        match self.mode {
            Mode::Strict => vehicle_ok(k, s, self.problem) && self.horizon.separated(self.problem, k, s),
            Mode::SafestWithinLimits => vehicle_ok(k, s, self.problem),
            Mode::Safest => true,
        }
    }

    fn improves(&self, objective: f64, effort: f64, clearance: f64) -> bool {
        let Some(best) = &self.best else { return true };
        if self.mode != Mode::Strict {
            match clearance.total_cmp(&best.clearance) {
                Ordering::Greater => return true,
                Ordering::Less => return false,
                Ordering::Equal => {}
            }
        }
        compare_candidates((objective, effort, &self.controls), (best.objective, best.effort, &best.controls))
            == Ordering::Less
    }

    fn descend(&mut self, covs: &[Matrix4<f64>], objective: f64, effort: f64, clearance: f64) {
        let k = self.controls.len() + 1;
        let k_max = self.problem.config.horizon;
        let state = *self.states.last().unwrap();
        // siblings that reach the same position share the covariance update
        let mut shared: Option<(Vector3<f64>, Vec<Matrix4<f64>>, f64)> = None;
        for i in 0..self.lattice.len() {
            let u = self.lattice[i];
            let next = vehicle::step(&state, &u, self.problem.vehicle);
            if !self.admissible(k, &next) {
                continue;
            }
            if !matches!(&shared, Some((p, _, _)) if *p == next.position) {
                let (c, total) = self.horizon.advance(self.problem, k, &next, covs);
                shared = Some((next.position, c, total));
            }
            let (_, next_covs, total) = shared.as_ref().unwrap();
            let obj = objective + total;
            if self.mode == Mode::Strict {
                if let Some(best) = &self.best {
                    // traces are non-negative, so the objective can only grow
                    if obj > best.objective {
                        continue;
                    }
                }
            }
            let eff = effort + u.effort();
            // the first step is fixed by the current velocity, so it only
            // counts when nothing else is controllable
            let clr = if k > 1 || k_max == 1 {
                clearance.min(self.horizon.min_separation(k, &next))
            } else {
                clearance
            };
            self.controls.push(u);
            self.states.push(next);
            if k == k_max {
                if self.improves(obj, eff, clr) {
                    self.best = Some(Best {
                        objective: obj,
                        effort: eff,
                        clearance: clr,
                        controls: self.controls.clone(),
                        states: self.states.clone(),
                    });
                }
            } else {
                let next_covs = next_covs.clone();
                self.descend(&next_covs, obj, eff, clr);
            }
            self.controls.pop();
            self.states.pop();
        }
    }

    fn run(problem: &'p PlanningProblem<'a>, mode: Mode) -> Option<Best> {
        let mut search = Search {
            problem,
            horizon: Horizon::new(problem),
            lattice: control_lattice(problem.config, problem.vehicle),
            mode,
            controls: Vec::with_capacity(problem.config.horizon),
            states: vec![problem.state],
            best: None,
        };
        let covs: Vec<Matrix4<f64>> = problem.targets.iter().map(|t| t.covariance).collect();
        search.descend(&covs, 0.0, 0.0, f64::INFINITY);
        search.best
    }
}

/// Best plan for one agent. When nothing is feasible it falls back to the
/// candidate with the largest minimum separation over the controllable steps,
/// preferring ones within vehicle limits, and flags the plan `degraded`.
pub fn solve(problem: &PlanningProblem<'_>) -> Plan {
    let (best, degraded) = match Search::run(problem, Mode::Strict) {
        Some(b) => (b, false),
        None => {
            let b = Search::run(problem, Mode::SafestWithinLimits)
                .or_else(|| Search::run(problem, Mode::Safest))
                .expect("unconstrained search always yields a candidate");
            (b, true)
        }
    };
    Plan {
        agent_id: problem.agent_id,
        controls: best.controls,
        states: best.states,
        objective: best.objective,
        created_step: problem.step,
        degraded,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::FilterConfig;
    use crate::sensing::in_fov;
    use nalgebra::Vector4;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    struct Fixture {
        cfg: PlannerConfig,
        vehicle: VehicleParams,
        filter: FilterParams,
        camera: CameraSpec,
        detection: DetectionProfile,
    }

    impl Fixture {
        fn new(horizon: usize) -> Self {
            Self {
                cfg: PlannerConfig { horizon, ..Default::default() },
                vehicle: VehicleParams::default(),
                filter: FilterParams::from_config(1.0, &FilterConfig::default()),
                camera: CameraSpec::default(),
                detection: DetectionProfile::default(),
            }
        }

        fn problem<'a>(&'a self, state: AgentState, targets: &'a [TargetEstimate], others: &'a [Plan]) -> PlanningProblem<'a> {
            PlanningProblem {
                agent_id: 0,
                state,
                step: 10,
                targets,
                others,
                config: &self.cfg,
                vehicle: &self.vehicle,
                filter: &self.filter,
                camera: &self.camera,
                detection: &self.detection,
            }
        }
    }

    fn target(id: usize, x: f64, y: f64, vx: f64, vy: f64) -> TargetEstimate {
        TargetEstimate::from_report(id, Vector2::new(x, y), [4.0, 4.0, 1.0, 1.0]).with_velocity(vx, vy)
    }

    trait WithVelocity {
        fn with_velocity(self, vx: f64, vy: f64) -> Self;
    }

    impl WithVelocity for TargetEstimate {
        fn with_velocity(mut self, vx: f64, vy: f64) -> Self {
            self.mean = Vector4::new(self.mean[0], self.mean[1], vx, vy);
            self
        }
    }

    fn at(x: f64, y: f64, z: f64) -> AgentState {
        AgentState::at_rest(Vector3::new(x, y, z))
    }

    #[test]
    fn centre_target_passes_all_sides() {
        let c = fov_binaries(&at(3.0, 4.0, 40.0), &Vector2::new(3.0, 4.0), &CameraSpec::default());
        assert_eq!((c.sum, c.inside), (4, true));
    }

    #[test]
    fn beyond_right_edge_fails_one_side() {
        let cam = CameraSpec::default();
        let (hx, _) = cam.half_extents(40.0);
        let c = fov_binaries(&at(0.0, 0.0, 40.0), &Vector2::new(hx + 0.5, 0.0), &cam);
        assert_eq!(c.sides, [true, false, true, true]);
        assert_eq!((c.sum, c.inside), (3, false));
    }

    #[test]
    fn binaries_agree_with_sensing_footprint() {
        let cam = CameraSpec::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let a = at(rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0), rng.gen_range(0.0..120.0));
            let t = Vector2::new(rng.gen_range(-60.0..60.0), rng.gen_range(-60.0..60.0));
            assert_eq!(fov_binaries(&a, &t, &cam).inside, in_fov(&a, &t, &cam));
        }
    }

    #[test]
    fn noise_ramp_clamps() {
        let cfg = PlannerConfig::default();
        let prof = DetectionProfile::default();
        let (s_low, r_low) = planning_noise(10.0, &cfg, &prof);
        assert!((s_low - 2.0 * 0.05).abs() < 1e-15);
        assert!((r_low[(0, 0)] - s_low * s_low).abs() < 1e-15 && r_low[(0, 1)] == 0.0);
        assert_eq!(planning_noise(150.0, &cfg, &prof).0, 2.0);
        assert!((planning_noise(65.0, &cfg, &prof).0 - 2.0 * 0.5).abs() < 1e-15);
        let high_floor = PlannerConfig { r_floor: 0.7, ..Default::default() };
        assert!((planning_noise(65.0, &high_floor, &prof).0 - 2.0 * 0.7).abs() < 1e-15);
    }

    #[test]
    fn noise_monotone_in_altitude() {
        let cfg = PlannerConfig::default();
        let prof = DetectionProfile::default();
        let mut last = 0.0;
        for i in 0..300 {
            let s = planning_noise(i as f64 * 0.5, &cfg, &prof).0;
            assert!(s >= last);
            last = s;
        }
    }

    #[test]
    fn unobserved_target_gives_open_loop_objective() {
        let fx = Fixture::new(3);
        let targets = [target(0, 500.0, 500.0, 0.0, 0.0)];
        let problem = fx.problem(at(0.0, 0.0, 50.0), &targets, &[]);
        let controls = [ControlInput::new(3.0, -1.0, 0.0); 3];
        // Oracle: Σ_k tr(A^k P A^kᵀ + Σ_{i<k} A^i Q A^iᵀ)
        let a = fx.filter.transition;
        let mut expected = 0.0;
        for k in 1..=3u32 {
            let ak = a.pow(k);
            let mut p = ak * targets[0].covariance * ak.transpose();
            for i in 0..k {
                let ai = a.pow(i);
                p += ai * fx.filter.process_noise * ai.transpose();
            }
            expected += p.trace();
        }
        assert!((rollout(&problem, &controls) - expected).abs() < 1e-9);
    }

    #[test]
    fn observed_target_matches_scripted_filter() {
        let fx = Fixture::new(3);
        let targets = [target(0, 0.0, 0.0, 0.0, 0.0)];
        let start = at(0.0, 0.0, 40.0);
        let problem = fx.problem(start, &targets, &[]);
        let controls = [ControlInput::ZERO; 3];
        // scripted recursion: predict then update with σ = λ r(40) at every step
        let sigma: f64 = 2.0 * ((40.0 - 30.0) / 70.0);
        let mut p = targets[0].covariance;
        let mut expected = 0.0;
        for _ in 0..3 {
            p = fx.filter.transition * p * fx.filter.transition.transpose() + fx.filter.process_noise;
            let s = p.fixed_view::<2, 2>(0, 0) + Matrix2::identity() * sigma * sigma;
            let k = p.fixed_view::<4, 2>(0, 0) * s.try_inverse().unwrap();
            p = p - k * p.fixed_view::<2, 4>(0, 0);
            expected += p.trace();
        }
        assert!((rollout(&problem, &controls) - expected).abs() < 1e-9);
    }

    #[test]
    fn extra_observer_never_hurts() {
        let fx = Fixture::new(3);
        let targets = [target(0, 0.0, 0.0, 0.2, 0.0), target(1, 3.0, 1.0, 0.0, 0.0)];
        let me = at(30.0, 0.0, 60.0);
        let alone = rollout(&fx.problem(me, &targets, &[]), &[ControlInput::ZERO; 3]);
        let helper = Plan::hover(1, at(0.0, 0.0, 45.0), 3, 10, &fx.vehicle);
        let helped = rollout(&fx.problem(me, &targets, std::slice::from_ref(&helper)), &[ControlInput::ZERO; 3]);
        assert!(helped < alone);
        assert!(helped >= 0.0);
    }

    #[test]
    fn solo_agent_in_bounds_is_feasible() {
        let fx = Fixture::new(3);
        let problem = fx.problem(at(0.0, 0.0, 50.0), &[], &[]);
        let controls = [ControlInput::ZERO; 3];
        let states = trajectory(&problem.state, &controls, &fx.vehicle);
        assert!(feasible(&problem, &states, &controls));
    }

    #[test]
    fn too_close_neighbour_is_infeasible() {
        let fx = Fixture::new(3);
        let other = Plan::hover(1, at(2.49, 0.0, 50.0), 3, 10, &fx.vehicle);
        let problem = fx.problem(at(0.0, 0.0, 50.0), &[], std::slice::from_ref(&other));
        let controls = [ControlInput::ZERO; 3];
        let states = trajectory(&problem.state, &controls, &fx.vehicle);
        assert!(!feasible(&problem, &states, &controls));
        let far = Plan::hover(1, at(2.51, 0.0, 50.0), 3, 10, &fx.vehicle);
        let problem = fx.problem(at(0.0, 0.0, 50.0), &[], std::slice::from_ref(&far));
        assert!(feasible(&problem, &states, &controls));
    }

    #[test]
    fn leaving_workspace_is_infeasible() {
        let fx = Fixture::new(3);
        let start = AgentState { position: Vector3::new(1985.0, 0.0, 50.0), velocity: Vector3::new(6.0, 0.0, 0.0) };
        let problem = fx.problem(start, &[], &[]);
        let controls = [ControlInput::ZERO; 3];
        let states = trajectory(&start, &controls, &fx.vehicle);
        assert!(fx.vehicle.workspace.contains(&states[2].position));
        assert!(!fx.vehicle.workspace.contains(&states[3].position));
        assert!(!feasible(&problem, &states, &controls));
    }

    #[test]
    fn hover_is_chosen_when_nothing_changes() {
        // With K = 1 the objective cannot depend on the control, so the
        // effort tie-break selects zero force.
        let fx = Fixture::new(1);
        let targets = [target(0, 0.0, 0.0, 0.0, 0.0)];
        let plan = solve(&fx.problem(at(0.0, 0.0, 40.0), &targets, &[]));
        assert_eq!(plan.controls, vec![ControlInput::ZERO]);
        assert!(!plan.degraded);
    }

    #[test]
    fn stationary_target_below_low_agent_is_held() {
        let fx = Fixture::new(3);
        let targets = [target(0, 0.0, 0.0, 0.0, 0.0)];
        let plan = solve(&fx.problem(at(0.0, 0.0, 25.0), &targets, &[]));
        // every step stays over the target at the floor, so hovering is optimal
        assert_eq!(plan.controls[0], ControlInput::ZERO);
        assert_eq!(plan.controls[1], ControlInput::ZERO);
    }

    #[test]
    fn chases_target_leaving_the_footprint() {
        let fx = Fixture::new(3);
        let (hx, _) = fx.camera.half_extents(30.0);
        let targets = [target(0, hx - 0.5, 0.0, 3.0, 0.0)];
        let problem = fx.problem(at(0.0, 0.0, 30.0), &targets, &[]);
        let plan = solve(&problem);
        assert!(plan.controls[0].force.x > 0.0, "{:?}", plan.controls[0]);
        // exhaustive check: the chosen objective is the lattice minimum
        let lattice = control_lattice(&fx.cfg, &fx.vehicle);
        let mut best = f64::INFINITY;
        for a in &lattice {
            for b in &lattice {
                for c in &lattice {
                    let u = [*a, *b, *c];
                    let states = trajectory(&problem.state, &u, &fx.vehicle);
                    if feasible(&problem, &states, &u) {
                        best = best.min(rollout(&problem, &u));
                    }
                }
            }
        }
        assert_eq!(plan.objective, best);
    }

    #[test]
    fn solved_plan_is_consistent() {
        let fx = Fixture::new(3);
        let targets = [target(0, 10.0, -4.0, 0.5, 0.5), target(1, -6.0, 2.0, -0.3, 0.1)];
        let other = Plan::hover(1, at(4.0, 0.0, 50.0), 3, 10, &fx.vehicle);
        let problem = fx.problem(at(0.0, 0.0, 50.0), &targets, std::slice::from_ref(&other));
        let plan = solve(&problem);
        assert_eq!(plan.states, trajectory(&problem.state, &plan.controls, &fx.vehicle));
        assert!(feasible(&problem, &plan.states, &plan.controls));
        assert_eq!(plan.objective, rollout(&problem, &plan.controls));
        assert_eq!(plan.created_step, 10);
    }

    #[test]
    fn boxed_in_agent_degrades() {
        let fx = Fixture::new(2);
        // a neighbour too close at the next step, which no control can change
        let other = Plan::hover(1, at(1.0, 0.0, 50.0), 2, 10, &fx.vehicle);
        let problem = fx.problem(at(0.0, 0.0, 50.0), &[], std::slice::from_ref(&other));
        let plan = solve(&problem);
        assert!(plan.degraded);
        assert_eq!(plan.states, trajectory(&problem.state, &plan.controls, &fx.vehicle));
        // the safest candidate accelerates away from the neighbour
        assert!(plan.controls[0].force.x < 0.0);
        assert!(plan.states[2].distance_to(&other.states[2]) > 1.0);
    }

    #[test]
    fn larger_lattice_never_worse() {
        let fx = Fixture::new(2);
        let mut fine = Fixture::new(2);
        fine.cfg.lattice = vec![-7.0, -3.5, 0.0, 3.5, 7.0];
        fine.cfg.candidate_budget = 125 * 125;
        let targets = [target(0, 8.0, 3.0, 1.0, 0.0), target(1, 9.0, -2.0, 1.0, 0.2)];
        let coarse = solve(&fx.problem(at(0.0, 0.0, 45.0), &targets, &[]));
        let finer = solve(&fine.problem(at(0.0, 0.0, 45.0), &targets, &[]));
        assert!(finer.objective <= coarse.objective);
    }

    #[test]
    fn predicted_state_alignment() {
        let v = VehicleParams::default();
        let start = AgentState { position: Vector3::new(0.0, 0.0, 50.0), velocity: Vector3::new(1.0, 0.0, 0.0) };
        let plan = Plan::hover(0, start, 3, 5, &v);
        assert_eq!(plan.predicted_state(5), start);
        assert_eq!(plan.predicted_state(7), plan.states[2]);
        let beyond = plan.predicted_state(20);
        assert_eq!(beyond.position, plan.states[3].position);
        assert_eq!(beyond.velocity, Vector3::zeros());
    }

    #[test]
    fn config_checks() {
        let v = VehicleParams::default();
        assert!(PlannerConfig::default().check(&v).is_empty());
        assert!(!PlannerConfig { horizon: 4, ..Default::default() }.check(&v).is_empty());
        assert!(!PlannerConfig { lattice: vec![-9.0, 0.0, 9.0], ..Default::default() }.check(&v).is_empty());
        assert!(!PlannerConfig { lattice: vec![], ..Default::default() }.check(&v).is_empty());
        assert!(!PlannerConfig { safety_distance: 0.0, ..Default::default() }.check(&v).is_empty());
    }
}
