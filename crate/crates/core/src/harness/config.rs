use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::clustering::ClusterParams;
use crate::coordination::CoordinationConfig;
use crate::error::{Error, FieldError, Result};
use crate::estimation::FilterConfig;
use crate::planner::PlannerConfig;
use crate::sea::{self, WaveParams, WaveSource};
use crate::sensing::{CameraSpec, DetectionProfile};
use crate::vehicle::VehicleParams;

/// Complete description of an episode. Parsed from a single JSON document;
/// missing keys take their defaults and unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub seed: u64,
    pub num_agents: usize,
    pub num_castaways: usize,
    /// Mission length (s); must be a whole number of vehicle time steps.
    pub duration: f64,
    /// Planar point the castaways scatter around.
    pub incident_point: [f64; 2],
    /// Radius of the disk castaways start in (m).
    pub castaway_spread: f64,
    /// Radius of the disk around the castaway centroid agents start in (m).
    pub agent_spawn_radius: f64,
    pub initial_altitude: f64,
    /// Per-axis standard deviation of the initial position reports (m).
    pub report_noise: f64,
    /// Noise scale `ζ`: measurement std is `ζ / p(z)`.
    pub measurement_noise_scale: f64,
    pub waves: Vec<WaveParams>,
    pub vehicle: VehicleParams,
    pub camera: CameraSpec,
    pub detection: DetectionProfile,
    pub filter: FilterConfig,
    pub clustering: ClusterParams,
    pub planner: PlannerConfig,
    pub coordination: CoordinationConfig,
}

pub fn default_waves() -> Vec<WaveParams> {
    let wave = |origin: [f64; 2], wavelength, wave_height, decay_rate| WaveParams {
        origin,
        wavelength,
        wave_height,
        decay_rate,
        ..WaveParams::default()
    };
    vec![
        wave([5.0, -5.0], 50.0, 0.5, 0.001),
        wave([-40.0, 30.0], 40.0, 0.4, 0.002),
        wave([60.0, 60.0], 60.0, 0.6, 0.001),
    ]
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            num_agents: 3,
            num_castaways: 3,
            duration: 600.0,
            incident_point: [0.0, 0.0],
            castaway_spread: 5.0,
            agent_spawn_radius: 10.0,
            initial_altitude: 50.0,
            report_noise: 2.0,
            measurement_noise_scale: 1.0,
            waves: default_waves(),
            vehicle: VehicleParams::default(),
            camera: CameraSpec::default(),
            detection: DetectionProfile::default(),
            filter: FilterConfig::default(),
            clustering: ClusterParams::default(),
            planner: PlannerConfig::default(),
            coordination: CoordinationConfig::default(),
        }
    }
}

impl SimConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn steps(&self) -> Result<usize> {
        sea::step_count(self.duration, self.vehicle.dt)
    }

    /// Every violated field, across all sub-configurations.
    pub fn check(&self) -> Vec<FieldError> {
        let mut errs = Vec::new();
        if self.num_agents == 0 {
            errs.push(FieldError::new("num_agents", "must be >= 1"));
        }
        if self.num_castaways == 0 {
            errs.push(FieldError::new("num_castaways", "must be >= 1"));
        }
        match self.steps() {
            Ok(0) => errs.push(FieldError::new("duration", "must cover at least one step")),
            Ok(_) => {}
            Err(e) => errs.push(FieldError::new("duration", e.to_string())),
        }
        for (name, v) in [
            ("castaway_spread", self.castaway_spread),
            ("report_noise", self.report_noise),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                errs.push(FieldError::new(name, "must be finite and >= 0"));
            }
        }
        if !(self.agent_spawn_radius.is_finite() && self.agent_spawn_radius > 0.0) {
            errs.push(FieldError::new("agent_spawn_radius", "must be finite and > 0"));
        } else {
            // generous packing bound for rejection sampling
            let d = self.planner.safety_distance;
            let capacity = ((self.agent_spawn_radius + d / 2.0) / (d / 2.0)).powi(2) * 0.5;
            if self.num_agents as f64 > capacity {
                errs.push(FieldError::new(
                    "agent_spawn_radius",
                    format!("too small to place {} agents {} m apart", self.num_agents, d),
                ));
            }
        }
        if !(self.measurement_noise_scale.is_finite() && self.measurement_noise_scale > 0.0) {
            errs.push(FieldError::new("measurement_noise_scale", "must be finite and > 0"));
        }
        if !self.incident_point.iter().all(|v| v.is_finite()) {
            errs.push(FieldError::new("incident_point", "must be finite"));
        }
        for (i, w) in self.waves.iter().enumerate() {
            if let Err(e) = WaveSource::new(w.clone()) {
                errs.push(FieldError::new(format!("waves[{i}]"), e.to_string()));
            }
        }
        errs.extend(self.vehicle.check());
        let ws = &self.vehicle.workspace;
        if !(self.initial_altitude >= self.vehicle.min_altitude.max(ws.min[2]) && self.initial_altitude <= ws.max[2]) {
            errs.push(FieldError::new("initial_altitude", "must lie inside the workspace above the altitude floor"));
        }
        errs.extend(self.camera.check());
        errs.extend(self.filter.check());
        errs.extend(self.clustering.check());
        errs.extend(self.planner.check(&self.vehicle));
        errs
    }

    pub fn validated(self) -> Result<Self> {
        let errs = self.check();
        if errs.is_empty() {
            Ok(self)
        } else {
            Err(Error::InvalidConfig(errs))
        }
    }

    pub fn wave_sources(&self) -> Result<Vec<WaveSource>> {
        self.waves.iter().cloned().map(WaveSource::new).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        assert_eq!(SimConfig::default().check(), vec![]);
        assert_eq!(SimConfig::default().steps().unwrap(), 600);
    }

    #[test]
    fn partial_json_fills_defaults() {
        let cfg = SimConfig::from_json_str(r#"{"num_agents": 2, "planner": {"horizon": 2}}"#).unwrap();
        assert_eq!(cfg.num_agents, 2);
        assert_eq!(cfg.planner.horizon, 2);
        assert_eq!(cfg.planner.safety_distance, 2.5);
        assert_eq!(cfg.num_castaways, 3);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(SimConfig::from_json_str(r#"{"num_agent": 2}"#).is_err());
        assert!(SimConfig::from_json_str(r#"{"vehicle": {"mas": 2}}"#).is_err());
    }

    #[test]
    fn report_lists_every_bad_field() {
        let cfg = SimConfig {
            num_agents: 0,
            num_castaways: 0,
            duration: 10.5,
            ..Default::default()
        };
        let Err(Error::InvalidConfig(errs)) = cfg.validated() else {
            panic!("expected a config report");
        };
        let fields: Vec<&str> = errs.iter().map(|e| e.field.as_str()).collect();
        assert!(fields.contains(&"num_agents"));
        assert!(fields.contains(&"num_castaways"));
        assert!(fields.contains(&"duration"));
    }

    #[test]
    fn nested_violations_are_reported() {
        let mut cfg = SimConfig::default();
        cfg.waves[1].wave_height = 10.0;
        cfg.planner.horizon = 0;
        cfg.initial_altitude = 10.0;
        let fields: Vec<String> = cfg.check().into_iter().map(|e| e.field).collect();
        assert!(fields.iter().any(|f| f == "waves[1]"));
        assert!(fields.iter().any(|f| f == "planner.horizon"));
        assert!(fields.iter().any(|f| f == "initial_altitude"));
    }

    #[test]
    fn crowded_spawn_disk_is_rejected() {
        let cfg = SimConfig {
            num_agents: 200,
            ..Default::default()
        };
        assert!(cfg.check().iter().any(|e| e.field == "agent_spawn_radius"));
    }
}
