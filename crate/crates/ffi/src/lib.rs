//! C ABI over the simulator.
//!
//! Objects cross the boundary as opaque handles created by `st_*_new`/`run`
//! functions and released by the matching `st_*_free`. Fallible calls return
//! an [`StStatus`]; on failure [`st_last_error`] describes the problem for the
//! calling thread. Output parameters are written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use swarmtrack::harness::{self, EpisodeLog, MonteCarloSummary, SimConfig};
use swarmtrack::sea::{WaveParams, WaveSource};
use swarmtrack::vehicle::AgentState;
use swarmtrack::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidParameter = 3,
    InvalidConfig = 4,
    Numerical = 5,
    Io = 6,
    Json = 7,
    OutOfRange = 8,
    Panic = 9,
}

/// Configuration handle.
pub struct StConfig(SimConfig);

/// Completed episode handle.
pub struct StEpisode(EpisodeLog);

/// Completed Monte Carlo sweep handle.
pub struct StMonteCarlo(MonteCarloSummary);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StMetrics {
    pub steps: usize,
    pub avg_trace: f64,
    pub rmse: f64,
    /// NaN when the fleet has a single agent.
    pub min_separation: f64,
    pub min_altitude: f64,
    pub max_altitude: f64,
    pub detections: usize,
    pub degraded_plans: usize,
    pub limit_violations: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StAgentState {
    pub position: [f64; 3],
    pub velocity: [f64; 3],
}

/// Fused estimate of one target: mean `[x, y, vx, vy]` and row-major covariance.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StEstimate {
    pub target_id: usize,
    pub mean: [f64; 4],
    pub covariance: [f64; 16],
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StSweepPoint {
    pub num_agents: usize,
    pub num_castaways: usize,
    pub runs: usize,
    pub mean_avg_trace: f64,
    pub std_avg_trace: f64,
    pub mean_rmse: f64,
    pub std_rmse: f64,
    /// NaN when every run had a single agent.
    pub min_separation: f64,
    pub min_altitude: f64,
    pub degraded_plans: usize,
    pub limit_violations: usize,
}

/// Wave field parameters; `steepness_limit <= 0` selects the default bound.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StWave {
    pub origin: [f64; 2],
    pub wavelength: f64,
    pub wave_height: f64,
    pub decay_rate: f64,
    pub water_depth: f64,
    pub gravity: f64,
    pub steepness_limit: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(StStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidParameter(_) => StStatus::InvalidParameter,
            Error::InvalidConfig(_) => StStatus::InvalidConfig,
            Error::SingularInnovation { .. } | Error::EmptyFusion | Error::MixedTargets { .. } => StStatus::Numerical,
            Error::Io { .. } | Error::Csv { .. } => StStatus::Io,
            Error::Json(_) => StStatus::Json,
        };
        Failure(status, e.to_string())
    }
}

fn fail(status: StStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Runs `f`, translating errors and panics into a status code.
fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> StStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => StStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(&format!("internal error: {msg}"));
            StStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| fail(StStatus::NullArgument, format!("`{name}` is null")))
}

unsafe fn deref_mut<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| fail(StStatus::NullArgument, format!("`{name}` is null")))
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(StStatus::NullArgument, format!("`{name}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(StStatus::InvalidUtf8, format!("`{name}` is not valid UTF-8")))
}

unsafe fn counts<'a>(p: *const usize, len: usize, name: &str) -> Result<&'a [usize], Failure> {
    match (p.is_null(), len) {
        (_, 0) => Ok(&[]),
        (true, _) => Err(fail(StStatus::NullArgument, format!("`{name}` is null"))),
        (false, n) => Ok(std::slice::from_raw_parts(p, n)),
    }
}

fn index(i: usize, len: usize, what: &str) -> Result<usize, Failure> {
    if i < len {
        Ok(i)
    } else {
        Err(fail(StStatus::OutOfRange, format!("{what} {i} out of range (0..{len})")))
    }
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn st_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn st_version() -> *const c_char {
    concat!("v", env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a string obtained from this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn st_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Creates a configuration holding every default.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn st_config_default(out: *mut *mut StConfig) -> StStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        *out = Box::into_raw(Box::new(StConfig(SimConfig::default())));
        Ok(())
    })
}

/// Parses and validates a JSON configuration. Omitted keys take defaults.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn st_config_from_json(json: *const c_char, out: *mut *mut StConfig) -> StStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        let cfg = SimConfig::from_json_str(text(json, "json")?)?.validated()?;
        *out = Box::into_raw(Box::new(StConfig(cfg)));
        Ok(())
    })
}

/// Serializes the full configuration. Free the result with [`st_string_free`].
///
/// # Safety
/// `cfg` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn st_config_to_json(cfg: *const StConfig, out: *mut *mut c_char) -> StStatus {
    guard(|| {
        let cfg = deref(cfg, "cfg")?;
        let out = deref_mut(out, "out")?;
        let json = serde_json::to_string(&cfg.0).map_err(|e| fail(StStatus::Json, e.to_string()))?;
        *out = CString::new(json).expect("JSON has no NUL").into_raw();
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn st_config_set_seed(cfg: *mut StConfig, seed: u64) -> StStatus {
    guard(|| {
        deref_mut(cfg, "cfg")?.0.seed = seed;
        Ok(())
    })
}

/// Sets fleet size and castaway count; the configuration is left unchanged
/// if the result would be invalid.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn st_config_set_fleet(cfg: *mut StConfig, num_agents: usize, num_castaways: usize) -> StStatus {
    guard(|| {
        let cfg = deref_mut(cfg, "cfg")?;
        let next = SimConfig {
            num_agents,
            num_castaways,
            ..cfg.0.clone()
        }
        .validated()?;
        cfg.0 = next;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn st_config_free(cfg: *mut StConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Runs one episode.
///
/// # Safety
/// `cfg` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn st_episode_run(cfg: *const StConfig, out: *mut *mut StEpisode) -> StStatus {
    guard(|| {
        let cfg = deref(cfg, "cfg")?;
        let out = deref_mut(out, "out")?;
        let log = harness::run_episode(&cfg.0)?;
        *out = Box::into_raw(Box::new(StEpisode(log)));
        Ok(())
    })
}

/// # Safety
/// `ep` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn st_episode_metrics(ep: *const StEpisode, out: *mut StMetrics) -> StStatus {
    guard(|| {
        let m = &deref(ep, "ep")?.0.metrics;
        *deref_mut(out, "out")? = StMetrics {
            steps: m.steps,
            avg_trace: m.avg_trace,
            rmse: m.rmse,
            min_separation: m.min_separation.unwrap_or(f64::NAN),
            min_altitude: m.min_altitude,
            max_altitude: m.max_altitude,
            detections: m.detections,
            degraded_plans: m.degraded_plans,
            limit_violations: m.limit_violations,
        };
        Ok(())
    })
}

/// Number of logged steps; 0 for a null handle.
///
/// # Safety
/// `ep` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn st_episode_step_count(ep: *const StEpisode) -> usize {
    ep.as_ref().map_or(0, |e| e.0.records.len())
}

fn agent_state(s: &AgentState) -> StAgentState {
    StAgentState {
        position: s.position.into(),
        velocity: s.velocity.into(),
    }
}

/// State of `agent` at the start of logged step index `step` (0-based).
///
/// # Safety
/// `ep` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn st_episode_agent_state(
    ep: *const StEpisode,
    step: usize,
    agent: usize,
    out: *mut StAgentState,
) -> StStatus {
    guard(|| {
        let log = &deref(ep, "ep")?.0;
        let out = deref_mut(out, "out")?;
        let r = &log.records[index(step, log.records.len(), "step")?];
        *out = agent_state(&r.agents[index(agent, r.agents.len(), "agent")?]);
        Ok(())
    })
}

/// Fused estimate of `target` after logged step index `step`.
///
/// # Safety
/// `ep` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn st_episode_fused_estimate(
    ep: *const StEpisode,
    step: usize,
    target: usize,
    out: *mut StEstimate,
) -> StStatus {
    guard(|| {
        let log = &deref(ep, "ep")?.0;
        let out = deref_mut(out, "out")?;
        let r = &log.records[index(step, log.records.len(), "step")?];
        let e = &r.fused[index(target, r.fused.len(), "target")?];
        let mut covariance = [0.0; 16];
        for i in 0..4 {
            for j in 0..4 {
                covariance[4 * i + j] = e.covariance[(i, j)];
            }
        }
        *out = StEstimate {
            target_id: e.target_id,
            mean: e.mean.into(),
            covariance,
        };
        Ok(())
    })
}

/// True position of `castaway` at logged step index `step`.
///
/// # Safety
/// `ep` must be a live handle; `out` must point to three writable doubles.
#[no_mangle]
pub unsafe extern "C" fn st_episode_truth(ep: *const StEpisode, step: usize, castaway: usize, out: *mut [f64; 3]) -> StStatus {
    guard(|| {
        let log = &deref(ep, "ep")?.0;
        let out = deref_mut(out, "out")?;
        let r = &log.records[index(step, log.records.len(), "step")?];
        *out = r.truths[index(castaway, r.truths.len(), "castaway")?].position.into();
        Ok(())
    })
}

/// Writes the episode tables and summary into directory `dir`.
///
/// # Safety
/// `ep` must be a live handle; `dir` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn st_episode_write(ep: *const StEpisode, dir: *const c_char) -> StStatus {
    guard(|| {
        let log = &deref(ep, "ep")?.0;
        harness::write_episode(log, Path::new(text(dir, "dir")?))?;
        Ok(())
    })
}

/// # Safety
/// `ep` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn st_episode_free(ep: *mut StEpisode) {
    if !ep.is_null() {
        drop(Box::from_raw(ep));
    }
}

/// Runs `runs` episodes per sweep point. Empty lists (length 0) keep the
/// configuration's fleet size or castaway count.
///
/// # Safety
/// `cfg` must be a live handle; `agents`/`castaways` must hold the given
/// number of elements; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn st_montecarlo_run(
    cfg: *const StConfig,
    runs: usize,
    agents: *const usize,
    num_agent_values: usize,
    castaways: *const usize,
    num_castaway_values: usize,
    out: *mut *mut StMonteCarlo,
) -> StStatus {
    guard(|| {
        let cfg = deref(cfg, "cfg")?;
        let out = deref_mut(out, "out")?;
        let agents = counts(agents, num_agent_values, "agents")?;
        let castaways = counts(castaways, num_castaway_values, "castaways")?;
        let summary = harness::run_monte_carlo(&cfg.0, runs, agents, castaways)?;
        *out = Box::into_raw(Box::new(StMonteCarlo(summary)));
        Ok(())
    })
}

/// Number of sweep points; 0 for a null handle.
///
/// # Safety
/// `mc` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn st_montecarlo_point_count(mc: *const StMonteCarlo) -> usize {
    mc.as_ref().map_or(0, |m| m.0.points.len())
}

/// # Safety
/// `mc` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn st_montecarlo_point(mc: *const StMonteCarlo, i: usize, out: *mut StSweepPoint) -> StStatus {
    guard(|| {
        let points = &deref(mc, "mc")?.0.points;
        let out = deref_mut(out, "out")?;
        let p = &points[index(i, points.len(), "point")?];
        *out = StSweepPoint {
            num_agents: p.num_agents,
            num_castaways: p.num_castaways,
            runs: p.runs,
            mean_avg_trace: p.mean_avg_trace,
            std_avg_trace: p.std_avg_trace,
            mean_rmse: p.mean_rmse,
            std_rmse: p.std_rmse,
            min_separation: p.min_separation.unwrap_or(f64::NAN),
            min_altitude: p.min_altitude,
            degraded_plans: p.degraded_plans,
            limit_violations: p.limit_violations,
        };
        Ok(())
    })
}

/// # Safety
/// `mc` must be a live handle; `dir` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn st_montecarlo_write(mc: *const StMonteCarlo, dir: *const c_char) -> StStatus {
    guard(|| {
        let summary = &deref(mc, "mc")?.0;
        harness::write_monte_carlo(summary, Path::new(text(dir, "dir")?))?;
        Ok(())
    })
}

/// # Safety
/// `mc` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn st_montecarlo_free(mc: *mut StMonteCarlo) {
    if !mc.is_null() {
        drop(Box::from_raw(mc));
    }
}

/// Scalar water velocity of a wave field at planar point `(x, y)` and time
/// `tau`.
///
/// # Safety
/// `wave` must be readable; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn st_water_velocity(wave: *const StWave, x: f64, y: f64, tau: f64, out: *mut f64) -> StStatus {
    guard(|| {
        let w = deref(wave, "wave")?;
        let out = deref_mut(out, "out")?;
        let defaults = WaveParams::default();
        let source = WaveSource::new(WaveParams {
            origin: w.origin,
            wavelength: w.wavelength,
            wave_height: w.wave_height,
            decay_rate: w.decay_rate,
            water_depth: w.water_depth,
            gravity: w.gravity,
            steepness_limit: if w.steepness_limit > 0.0 {
                w.steepness_limit
            } else {
                defaults.steepness_limit
            },
        })?;
        *out = source.water_velocity(&[x, y, 0.0].into(), tau);
        Ok(())
    })
}
