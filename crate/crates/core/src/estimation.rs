//! Constant-velocity Kalman filter over a target's planar state with
//! intermittent observations, and inverse-trace fusion across agents.

use nalgebra::{Matrix2, Matrix2x4, Matrix4, Matrix4x2, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, FieldError, Result};

/// Mean `[x, y, vx, vy]` and covariance of one target as held by one agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetEstimate {
    pub target_id: usize,
    pub mean: Vector4<f64>,
    pub covariance: Matrix4<f64>,
}

impl TargetEstimate {
    pub fn new(target_id: usize, mean: Vector4<f64>, covariance: Matrix4<f64>) -> Self {
        Self {
            target_id,
            mean,
            covariance,
        }
    }

    /// Estimate at rest at `xy` with the given covariance diagonal.
    pub fn from_report(target_id: usize, xy: Vector2<f64>, cov_diag: [f64; 4]) -> Self {
        Self {
            target_id,
            mean: Vector4::new(xy.x, xy.y, 0.0, 0.0),
            covariance: Matrix4::from_diagonal(&Vector4::from(cov_diag)),
        }
    }

    pub fn position(&self) -> Vector2<f64> {
        Vector2::new(self.mean[0], self.mean[1])
    }

    pub fn velocity(&self) -> Vector2<f64> {
        Vector2::new(self.mean[2], self.mean[3])
    }

    pub fn trace(&self) -> f64 {
        self.covariance.trace()
    }
}

/// Filter tuning as it appears in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterConfig {
    /// Diagonal of the process noise `Q` (m², m², m²/s², m²/s²).
    pub process_noise: [f64; 4],
    /// Diagonal of the initial covariance `P₀`.
    pub initial_covariance: [f64; 4],
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            process_noise: [0.05, 0.05, 0.01, 0.01],
            initial_covariance: [4.0, 4.0, 1.0, 1.0],
        }
    }
}

impl FilterConfig {
    pub fn check(&self) -> Vec<FieldError> {
        let mut errs = Vec::new();
        if self.process_noise.iter().any(|q| !(q.is_finite() && *q >= 0.0)) {
            errs.push(FieldError::new("filter.process_noise", "entries must be finite and >= 0"));
        }
        if self.initial_covariance.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            errs.push(FieldError::new("filter.initial_covariance", "entries must be finite and > 0"));
        }
        errs
    }
}

/// Transition, process noise and observation model of the per-target filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterParams {
    pub transition: Matrix4<f64>,
    pub process_noise: Matrix4<f64>,
    pub observation: Matrix2x4<f64>,
}

impl FilterParams {
    pub fn new(dt: f64, process_noise: Matrix4<f64>) -> Self {
        let mut transition = Matrix4::identity();
        transition[(0, 2)] = dt;
        transition[(1, 3)] = dt;
        let mut observation = Matrix2x4::zeros();
        observation[(0, 0)] = 1.0;
        observation[(1, 1)] = 1.0;
        Self {
            transition,
            process_noise,
            observation,
        }
    }

    pub fn from_config(dt: f64, cfg: &FilterConfig) -> Self {
        Self::new(dt, Matrix4::from_diagonal(&Vector4::from(cfg.process_noise)))
    }
}

fn symmetrize(p: &Matrix4<f64>) -> Matrix4<f64> {
    (p + p.transpose()) * 0.5
}

/// Time update of a covariance: `A P Aᵀ + Q`.
pub fn predict_covariance(p: &Matrix4<f64>, params: &FilterParams) -> Matrix4<f64> {
    let a = &params.transition;
    symmetrize(&(a * p * a.transpose() + params.process_noise))
}

/// Kalman gain for a position measurement with noise covariance `r`.
fn gain(p: &Matrix4<f64>, r: &Matrix2<f64>, c: &Matrix2x4<f64>) -> Option<Matrix4x2<f64>> {
    let pct = p * c.transpose();
    let innovation = c * pct + r;
    innovation.try_inverse().map(|s_inv| pct * s_inv)
}

/// Measurement update of a covariance alone: `P - K C P`. Returns `None` when
/// the innovation covariance is singular.
pub fn update_covariance(p: &Matrix4<f64>, r: &Matrix2<f64>, params: &FilterParams) -> Option<Matrix4<f64>> {
    let c = &params.observation;
    let k = gain(p, r, c)?;
    Some(symmetrize(&(p - k * (c * p))))
}

pub fn predict(est: &TargetEstimate, params: &FilterParams) -> TargetEstimate {
    TargetEstimate {
        target_id: est.target_id,
        mean: params.transition * est.mean,
        covariance: predict_covariance(&est.covariance, params),
    }
}

pub fn update(
    est: &TargetEstimate,
    measurement: &Vector2<f64>,
    r: &Matrix2<f64>,
    params: &FilterParams,
) -> Result<TargetEstimate> {
    let c = &params.observation;
    let k = gain(&est.covariance, r, c).ok_or(Error::SingularInnovation {
        target_id: est.target_id,
    })?;
    let innovation = measurement - c * est.mean;
    Ok(TargetEstimate {
        target_id: est.target_id,
        mean: est.mean + k * innovation,
        covariance: symmetrize(&(est.covariance - k * (c * est.covariance))),
    })
}

/// A step without an observation: the prior is kept as the posterior.
pub fn update_missed(est: &TargetEstimate) -> TargetEstimate {
    *est
}

/// Normalised inverse-trace weights. A zero trace takes all the weight
/// (first such index wins).
pub fn fusion_weights(traces: &[f64]) -> Vec<f64> {
    if let Some(idx) = traces.iter().position(|&t| t <= 0.0) {
        let mut w = vec![0.0; traces.len()];
        w[idx] = 1.0;
        return w;
    }
    let inv: Vec<f64> = traces.iter().map(|t| 1.0 / t).collect();
    let total: f64 = inv.iter().sum();
    inv.into_iter().map(|i| i / total).collect()
}

/// Convex combination `Σ ωᵢ meanᵢ`, `Σ ωᵢ² Pᵢ` of several agents' estimates of
/// the same target, with scalar weights from [`fusion_weights`].
pub fn fuse(estimates: &[TargetEstimate]) -> Result<TargetEstimate> {
    let first = estimates.first().ok_or(Error::EmptyFusion)?;
    if let Some(other) = estimates.iter().find(|e| e.target_id != first.target_id) {
        return Err(Error::MixedTargets {
            expected: first.target_id,
            found: other.target_id,
        });
    }
    if estimates.len() == 1 {
        return Ok(*first);
    }
    let traces: Vec<f64> = estimates.iter().map(TargetEstimate::trace).collect();
    let weights = fusion_weights(&traces);
    let mut mean = Vector4::zeros();
    let mut cov = Matrix4::zeros();
    for (e, w) in estimates.iter().zip(&weights) {
        mean += e.mean * *w;
        cov += e.covariance * (w * w);
    }
    Ok(TargetEstimate {
        target_id: first.target_id,
        mean,
        covariance: symmetrize(&cov),
    })
}
