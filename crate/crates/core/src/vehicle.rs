//! Discrete double-integrator UAV model with drag.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack applied to every bound comparison in [`validate`].
pub const LIMIT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
}

impl AgentState {
    pub fn at_rest(position: Vector3<f64>) -> Self {
        Self {
            position,
            velocity: Vector3::zeros(),
        }
    }

    pub fn altitude(&self) -> f64 {
        self.position.z
    }

    pub fn distance_to(&self, other: &AgentState) -> f64 {
        (self.position - other.position).norm()
    }
}

impl std::ops::Add for AgentState {
    type Output = AgentState;

    fn add(self, rhs: Self) -> Self::Output {
        AgentState {
            position: self.position + rhs.position,
            velocity: self.velocity + rhs.velocity,
        }
    }
}

/// Force applied along each axis (N).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlInput {
    pub force: Vector3<f64>,
}

impl ControlInput {
    pub const ZERO: ControlInput = ControlInput {
        force: Vector3::new(0.0, 0.0, 0.0),
    };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self {
            force: Vector3::new(x, y, z),
        }
    }

    pub fn effort(&self) -> f64 {
        self.force.norm_squared()
    }
}

impl std::ops::Add for ControlInput {
    type Output = ControlInput;

    fn add(self, rhs: Self) -> Self::Output {
        ControlInput {
            force: self.force + rhs.force,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Workspace {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Workspace {
    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] - LIMIT_TOLERANCE && p[i] <= self.max[i] + LIMIT_TOLERANCE)
    }
}

impl Default for Workspace {
    fn default() -> Self {
        Self {
            min: [-2000.0, -2000.0, 25.0],
            max: [2000.0, 2000.0, 120.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VehicleParams {
    /// Mass `m` (kg).
    pub mass: f64,
    /// Velocity retention factor `ρ` per step, in (0, 1].
    pub drag: f64,
    /// Sampling interval `δt` (s).
    pub dt: f64,
    pub max_horizontal_speed: f64,
    pub max_vertical_speed: f64,
    /// Per-axis bound on `force / mass` (m/s²).
    pub max_acceleration: f64,
    /// Altitude floor (m).
    pub min_altitude: f64,
    pub workspace: Workspace,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            mass: 1.5,
            drag: 0.98,
            dt: 1.0,
            max_horizontal_speed: 12.0,
            max_vertical_speed: 7.0,
            max_acceleration: 7.0,
            min_altitude: 25.0,
            workspace: Workspace::default(),
        }
    }
}

impl VehicleParams {
    /// `γ = δt / m`: converts force into a per-step velocity change.
    pub fn gamma(&self) -> f64 {
        self.dt / self.mass
    }

    /// Largest admissible force magnitude per axis.
    pub fn max_force(&self) -> f64 {
        self.max_acceleration * self.mass
    }

    pub fn check(&self) -> Vec<crate::error::FieldError> {
        use crate::error::FieldError;
        let mut errs = Vec::new();
        if !(self.mass.is_finite() && self.mass > 0.0) {
            errs.push(FieldError::new("vehicle.mass", "must be > 0"));
        }
        if !(self.drag > 0.0 && self.drag <= 1.0) {
            errs.push(FieldError::new("vehicle.drag", "must lie in (0, 1]"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            errs.push(FieldError::new("vehicle.dt", "must be > 0"));
        }
        for (name, v) in [
            ("vehicle.max_horizontal_speed", self.max_horizontal_speed),
            ("vehicle.max_vertical_speed", self.max_vertical_speed),
            ("vehicle.max_acceleration", self.max_acceleration),
        ] {
            if !(v.is_finite() && v > 0.0) {
                errs.push(FieldError::new(name, "must be > 0"));
            }
        }
        let ws = &self.workspace;
        if (0..3).any(|i| !(ws.min[i] < ws.max[i])) {
            errs.push(FieldError::new("vehicle.workspace", "min must be below max on every axis"));
        }
        if !(self.min_altitude < ws.max[2]) {
            errs.push(FieldError::new(
                "vehicle.min_altitude",
                "must lie below the workspace ceiling",
            ));
        }
        errs
    }

    pub fn validated(self) -> Result<Self> {
        match self.check().into_iter().next() {
            Some(e) => Err(Error::InvalidParameter(e)),
            None => Ok(self),
        }
    }

    /// Velocity, altitude floor and workspace bounds of a state.
    pub fn state_within_limits(&self, state: &AgentState) -> bool {
        let v = &state.velocity;
        let h = self.max_horizontal_speed + LIMIT_TOLERANCE;
        v.x.abs() <= h
            && v.y.abs() <= h
            && v.z.abs() <= self.max_vertical_speed + LIMIT_TOLERANCE
            && state.position.z >= self.min_altitude - LIMIT_TOLERANCE
            && self.workspace.contains(&state.position)
    }

    pub fn control_within_limits(&self, u: &ControlInput) -> bool {
        let limit = self.max_acceleration + LIMIT_TOLERANCE;
        u.force.iter().all(|f| (f / self.mass).abs() <= limit)
    }
}

/// One step of `x' = A x + B u` with `A = [[I, δt I], [0, ρ I]]` and
/// `B = [[0], [γ I]]`. Limits are not enforced here.
pub fn step(state: &AgentState, u: &ControlInput, params: &VehicleParams) -> AgentState {
    AgentState {
        position: state.position + state.velocity * params.dt,
        velocity: state.velocity * params.drag + u.force * params.gamma(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationKind {
    Velocity,
    Acceleration,
    AltitudeFloor,
    Workspace,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub axis: Axis,
    /// The offending value (signed).
    pub value: f64,
    /// The bound it was compared against.
    pub limit: f64,
}

/// Reports every violated bound of a state and the control applied from it.
pub fn validate(state: &AgentState, u: &ControlInput, params: &VehicleParams) -> Vec<Violation> {
    let mut out = Vec::new();
    for axis in Axis::ALL {
        let i = axis.index();
        let v = state.velocity[i];
        let vmax = if axis == Axis::Z {
            params.max_vertical_speed
        } else {
            params.max_horizontal_speed
        };
        if v.abs() > vmax + LIMIT_TOLERANCE {
            out.push(Violation { kind: ViolationKind::Velocity, axis, value: v, limit: vmax });
        }
        let acc = u.force[i] / params.mass;
        if acc.abs() > params.max_acceleration + LIMIT_TOLERANCE {
            out.push(Violation {
                kind: ViolationKind::Acceleration,
                axis,
                value: acc,
                limit: params.max_acceleration,
            });
        }
        let p = state.position[i];
        let ws = &params.workspace;
        if p < ws.min[i] - LIMIT_TOLERANCE {
            out.push(Violation { kind: ViolationKind::Workspace, axis, value: p, limit: ws.min[i] });
        } else if p > ws.max[i] + LIMIT_TOLERANCE {
            out.push(Violation { kind: ViolationKind::Workspace, axis, value: p, limit: ws.max[i] });
        }
    }
    if state.position.z < params.min_altitude - LIMIT_TOLERANCE {
        out.push(Violation {
            kind: ViolationKind::AltitudeFloor,
            axis: Axis::Z,
            value: state.position.z,
            limit: params.min_altitude,
        });
    }
    out
}
