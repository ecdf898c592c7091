//! Ground-truth castaway drift under a small-amplitude Stokes-drift wave model.
//!
//! Each [`WaveSource`] radiates from a planar origin. A castaway at planar
//! distance `d` from that origin experiences the scalar water velocity
//!
//! ```text
//! v = (ω h / 2) · exp(-w d) · sin(q d - ω τ)
//! ```
//!
//! and is pushed along `[cos φ, sin φ, 1]`, where `φ` is the bearing of the
//! castaway seen from the origin. Several sources superpose linearly.

use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const STANDARD_GRAVITY: f64 = 9.81;

/// Default bound on the wave steepness `q·h`.
pub const DEFAULT_STEEPNESS_LIMIT: f64 = 0.2;

/// User-facing wave parameters, as they appear in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WaveParams {
    /// Planar origin of the wave field (m).
    pub origin: [f64; 2],
    /// Wavelength `L` (m).
    pub wavelength: f64,
    /// Wave height `h` (m).
    pub wave_height: f64,
    /// Envelope decay rate `w` (1/m).
    pub decay_rate: f64,
    /// Water depth `D` (m).
    pub water_depth: f64,
    pub gravity: f64,
    /// Largest accepted `q·h` (small-amplitude regime).
    pub steepness_limit: f64,
}

impl Default for WaveParams {
    fn default() -> Self {
        Self {
            origin: [0.0, 0.0],
            wavelength: 50.0,
            wave_height: 1.0,
            decay_rate: 0.001,
            water_depth: 500.0,
            gravity: STANDARD_GRAVITY,
            steepness_limit: DEFAULT_STEEPNESS_LIMIT,
        }
    }
}

/// A validated wave field with its derived dispersion quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveSource {
    params: WaveParams,
    wave_number: f64,
    depth_factor: f64,
    period: f64,
    frequency: f64,
}

impl WaveSource {
    pub fn new(params: WaveParams) -> Result<Self> {
        let positive = [
            ("wavelength", params.wavelength),
            ("wave_height", params.wave_height),
            ("water_depth", params.water_depth),
            ("gravity", params.gravity),
            ("steepness_limit", params.steepness_limit),
        ];
        for (field, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::param(field, format!("must be finite and > 0, got {value}")));
            }
        }
        if !(params.decay_rate.is_finite() && params.decay_rate >= 0.0) {
            return Err(Error::param(
                "decay_rate",
                format!("must be finite and >= 0, got {}", params.decay_rate),
            ));
        }
        if !params.origin.iter().all(|c| c.is_finite()) {
            return Err(Error::param("origin", "coordinates must be finite"));
        }

        let wave_number = 2.0 * PI / params.wavelength;
        let steepness = wave_number * params.wave_height;
        if steepness >= params.steepness_limit {
            return Err(Error::param(
                "wave_height",
                format!(
                    "q*h = {steepness:.4} violates the small-amplitude limit {}",
                    params.steepness_limit
                ),
            ));
        }
        // tanh(qD) < 1 holds for every finite depth; in f64 it saturates to
        // exactly 1.0 once qD exceeds ~19, so only the upper bound is checked.
        let depth_factor = (wave_number * params.water_depth).tanh();
        if !(depth_factor > 0.0 && depth_factor <= 1.0) {
            return Err(Error::param("water_depth", "tanh(q*D) must lie in (0, 1]"));
        }
        let period = (2.0 * PI * params.wavelength / (params.gravity * depth_factor)).sqrt();
        let frequency = 2.0 * PI / period;

        Ok(Self {
            params,
            wave_number,
            depth_factor,
            period,
            frequency,
        })
    }

    pub fn params(&self) -> &WaveParams {
        &self.params
    }

    /// `q = 2π / L`.
    pub fn wave_number(&self) -> f64 {
        self.wave_number
    }

    /// `Z = tanh(q D)`.
    pub fn depth_factor(&self) -> f64 {
        self.depth_factor
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Angular frequency `ω = 2π / T`.
    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    /// Upper bound `ω h / 2` on the magnitude of [`water_velocity`](Self::water_velocity).
    pub fn velocity_envelope(&self) -> f64 {
        self.frequency * self.params.wave_height / 2.0
    }

    fn planar_offset(&self, pos: &Vector3<f64>) -> (f64, f64) {
        (pos.x - self.params.origin[0], pos.y - self.params.origin[1])
    }

    /// Scalar water velocity at `pos` and time `tau` (s).
    pub fn water_velocity(&self, pos: &Vector3<f64>, tau: f64) -> f64 {
        let (dx, dy) = self.planar_offset(pos);
        let d = dx.hypot(dy);
        self.velocity_envelope()
            * (-self.params.decay_rate * d).exp()
            * (self.wave_number * d - self.frequency * tau).sin()
    }

    /// Bearing of `pos` seen from the origin; 0 exactly at the origin.
    pub fn bearing(&self, pos: &Vector3<f64>) -> f64 {
        let (dx, dy) = self.planar_offset(pos);
        if dx == 0.0 && dy == 0.0 {
            0.0
        } else {
            dy.atan2(dx)
        }
    }

    /// Displacement this source imparts over one step of length `dt`.
    pub fn displacement(&self, pos: &Vector3<f64>, tau: f64, dt: f64) -> Vector3<f64> {
        let v = self.water_velocity(pos, tau);
        let phi = self.bearing(pos);
        Vector3::new(phi.cos(), phi.sin(), 1.0) * (v * dt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CastawayTruth {
    pub id: usize,
    pub position: Vector3<f64>,
}

/// Advances one castaway under a single wave source.
pub fn drift_step(wave: &WaveSource, castaway: &CastawayTruth, tau: f64, dt: f64) -> CastawayTruth {
    CastawayTruth {
        id: castaway.id,
        position: castaway.position + wave.displacement(&castaway.position, tau, dt),
    }
}

/// Advances one castaway under the superposition of several sources.
pub fn drift_step_superposed(
    waves: &[WaveSource],
    castaway: &CastawayTruth,
    tau: f64,
    dt: f64,
) -> CastawayTruth {
    let shift = waves
        .iter()
        .fold(Vector3::zeros(), |acc, w| acc + w.displacement(&castaway.position, tau, dt));
    CastawayTruth {
        id: castaway.id,
        position: castaway.position + shift,
    }
}

/// Dense castaway trajectories; row `s` holds every castaway at time `s·dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthTable {
    pub dt: f64,
    pub rows: Vec<Vec<CastawayTruth>>,
}

impl TruthTable {
    /// Number of simulated steps (rows minus the initial one).
    pub fn steps(&self) -> usize {
        self.rows.len().saturating_sub(1)
    }

    pub fn at(&self, step: usize) -> &[CastawayTruth] {
        &self.rows[step]
    }

    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let wrap = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut w = csv::Writer::from_path(path).map_err(wrap)?;
        w.write_record(["step", "castaway_id", "x", "y", "z"]).map_err(wrap)?;
        for (step, row) in self.rows.iter().enumerate() {
            for c in row {
                w.write_record(&[
                    step.to_string(),
                    c.id.to_string(),
                    c.position.x.to_string(),
                    c.position.y.to_string(),
                    c.position.z.to_string(),
                ])
                .map_err(wrap)?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Number of whole steps of length `dt` in `duration`.
pub fn step_count(duration: f64, dt: f64) -> Result<usize> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::param("dt", "must be finite and > 0"));
    }
    if !(duration.is_finite() && duration >= 0.0) {
        return Err(Error::param("duration", "must be finite and >= 0"));
    }
    let steps = (duration / dt).round();
    if (steps * dt - duration).abs() > 1e-9 * duration.max(1.0) {
        return Err(Error::param(
            "duration",
            format!("{duration} is not an integral multiple of dt = {dt}"),
        ));
    }
    Ok(steps as usize)
}

/// Rolls every castaway forward for `duration` seconds. Castaway ids are the
/// indices of `initial_positions`.
pub fn generate_truth(
    waves: &[WaveSource],
    initial_positions: &[Vector3<f64>],
    duration: f64,
    dt: f64,
) -> Result<TruthTable> {
    let steps = step_count(duration, dt)?;
    let mut rows = Vec::with_capacity(steps + 1);
    let mut current: Vec<CastawayTruth> = initial_positions
        .iter()
        .enumerate()
        .map(|(id, &position)| CastawayTruth { id, position })
        .collect();
    rows.push(current.clone());
    for s in 0..steps {
        let tau = s as f64 * dt;
        current = current
            .iter()
            .map(|c| drift_step_superposed(waves, c, tau, dt))
            .collect();
        rows.push(current.clone());
    }
    Ok(TruthTable { dt, rows })
}
