//! Downward camera footprint, altitude-dependent detection and noisy
//! position measurements.

use nalgebra::Vector2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, FieldError, Result};
use crate::sea::CastawayTruth;
use crate::vehicle::AgentState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CameraSpec {
    /// Horizontal field-of-view angle θ (rad).
    pub horizontal_fov: f64,
    /// Vertical field-of-view angle φ (rad).
    pub vertical_fov: f64,
}

impl Default for CameraSpec {
    fn default() -> Self {
        Self {
            horizontal_fov: 30f64.to_radians(),
            vertical_fov: 20f64.to_radians(),
        }
    }
}

impl CameraSpec {
    pub fn check(&self) -> Vec<FieldError> {
        let mut errs = Vec::new();
        for (name, a) in [
            ("camera.horizontal_fov", self.horizontal_fov),
            ("camera.vertical_fov", self.vertical_fov),
        ] {
            if !(a > 0.0 && a < std::f64::consts::PI) {
                errs.push(FieldError::new(name, format!("must lie in (0, pi), got {a}")));
            }
        }
        errs
    }

    /// Half-extents `(z·tan(θ/2), z·tan(φ/2))` of the footprint.
    pub fn half_extents(&self, z: f64) -> (f64, f64) {
        let (lh, lv) = fov_extents(z, self);
        (lh / 2.0, lv / 2.0)
    }
}

/// Footprint side lengths `(l_h, l_v)` at altitude `z`.
pub fn fov_extents(z: f64, cam: &CameraSpec) -> (f64, f64) {
    (
        2.0 * z * (cam.horizontal_fov / 2.0).tan(),
        2.0 * z * (cam.vertical_fov / 2.0).tan(),
    )
}

/// Closed-rectangle footprint test centred on the agent's planar position.
pub fn in_fov(agent: &AgentState, target_xy: &Vector2<f64>, cam: &CameraSpec) -> bool {
    let (hx, hy) = cam.half_extents(agent.position.z);
    (target_xy.x - agent.position.x).abs() <= hx && (target_xy.y - agent.position.y).abs() <= hy
}

/// Piecewise-linear detection probability: 1 up to `alpha1`, `p_min` from
/// `alpha2`, linear in between. The slope and intercept are fixed by
/// continuity at both breakpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DetectionProfileSpec", into = "DetectionProfileSpec")]
pub struct DetectionProfile {
    alpha1: f64,
    alpha2: f64,
    beta1: f64,
    beta2: f64,
    p_min: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DetectionProfileSpec {
    alpha1: f64,
    alpha2: f64,
    p_min: f64,
}

impl TryFrom<DetectionProfileSpec> for DetectionProfile {
    type Error = Error;

    fn try_from(s: DetectionProfileSpec) -> Result<Self> {
        DetectionProfile::new(s.alpha1, s.alpha2, s.p_min)
    }
}

impl From<DetectionProfile> for DetectionProfileSpec {
    fn from(p: DetectionProfile) -> Self {
        Self {
            alpha1: p.alpha1,
            alpha2: p.alpha2,
            p_min: p.p_min,
        }
    }
}

impl Default for DetectionProfile {
    fn default() -> Self {
        Self::new(30.0, 100.0, 0.25).expect("default profile is valid")
    }
}

impl DetectionProfile {
    pub fn new(alpha1: f64, alpha2: f64, p_min: f64) -> Result<Self> {
        if !(alpha1.is_finite() && alpha2.is_finite() && alpha1 >= 0.0 && alpha1 < alpha2) {
            return Err(Error::param(
                "detection.alpha1",
                format!("need 0 <= alpha1 < alpha2, got {alpha1} and {alpha2}"),
            ));
        }
        if !(p_min > 0.0 && p_min <= 1.0) {
            return Err(Error::param("detection.p_min", format!("must lie in (0, 1], got {p_min}")));
        }
        let beta1 = (p_min - 1.0) / (alpha2 - alpha1);
        let beta2 = 1.0 - beta1 * alpha1;
        Ok(Self {
            alpha1,
            alpha2,
            beta1,
            beta2,
            p_min,
        })
    }

    pub fn alpha1(&self) -> f64 {
        self.alpha1
    }

    pub fn alpha2(&self) -> f64 {
        self.alpha2
    }

    pub fn beta1(&self) -> f64 {
        self.beta1
    }

    pub fn beta2(&self) -> f64 {
        self.beta2
    }

    pub fn p_min(&self) -> f64 {
        self.p_min
    }
}

pub fn detection_probability(z: f64, prof: &DetectionProfile) -> f64 {
    if z <= prof.alpha1 {
        1.0
    } else if z >= prof.alpha2 {
        prof.p_min
    } else {
        prof.beta1 * z + prof.beta2
    }
}

/// Per-axis measurement noise standard deviation `ζ / p(z)`.
pub fn measurement_noise_std(z: f64, prof: &DetectionProfile, zeta: f64) -> f64 {
    zeta / detection_probability(z, prof)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub agent_id: usize,
    pub target_id: usize,
    pub value: Vector2<f64>,
    pub step: usize,
    /// Per-axis standard deviation the sample was drawn with.
    pub noise_std: f64,
}

/// Everything an agent needs to turn ground truth into measurements.
#[derive(Debug, Clone, Copy)]
pub struct SensorModel<'a> {
    pub camera: &'a CameraSpec,
    pub detection: &'a DetectionProfile,
    pub zeta: f64,
}

/// Draws this step's measurement set for one agent.
///
/// Targets are visited in the order given. For each target inside the
/// footprint one uniform draw decides detection, and a detected target
/// consumes two further standard-normal draws (x then y). Targets outside the
/// footprint consume nothing from `rng`.
pub fn sense<R: Rng + ?Sized>(
    agent_id: usize,
    agent: &AgentState,
    truths: &[CastawayTruth],
    sensor: &SensorModel<'_>,
    step: usize,
    rng: &mut R,
) -> Vec<Measurement> {
    let p = detection_probability(agent.position.z, sensor.detection);
    let std = sensor.zeta / p;
    let mut out = Vec::new();
    for truth in truths {
        let xy = truth.position.xy();
        if !in_fov(agent, &xy, sensor.camera) {
            continue;
        }
        let roll: f64 = rng.gen();
        if roll >= p {
            continue;
        }
        let nx: f64 = StandardNormal.sample(rng);
        let ny: f64 = StandardNormal.sample(rng);
        out.push(Measurement {
            agent_id,
            target_id: truth.id,
            value: xy + Vector2::new(nx, ny) * std,
            step,
            noise_std: std,
        });
    }
    out
}
