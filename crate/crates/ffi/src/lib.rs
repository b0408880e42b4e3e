//! C interface to the simulator.
//!
//! Scenarios and rollouts are opaque handles owned by the caller and released
//! with the matching `*_free` function. Every fallible call returns a
//! [`HotspotStatus`]; on failure, [`hotspot_last_error_message`] describes the
//! most recent error on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use hotspot::calib::CalibScenario;
use hotspot::config::ScenarioConfig;
use hotspot::rng::mix;
use hotspot::simcore::{run_simulation, DailySummary, EventLog};
use hotspot::Error;

/// Result of a fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HotspotStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The scenario or another input failed validation.
    InvalidInput = 3,
    /// Reading or writing a file failed.
    Io = 4,
    /// The simulation itself failed.
    Runtime = 5,
    /// An internal panic was caught at the boundary.
    Panic = 6,
}

/// A validated scenario with its region data loaded.
pub struct HotspotScenario {
    config: ScenarioConfig,
    scenario: CalibScenario,
}

/// One simulated rollout: its event log and daily compartment counts.
pub struct HotspotRollout {
    seed: u64,
    population: usize,
    log: EventLog,
    daily: Vec<DailySummary>,
}

/// Compartment counts at the end of one simulated day. The compartments
/// other than `hospitalized` partition the population.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct HotspotDaily {
    pub day: u32,
    pub susceptible: u64,
    pub exposed: u64,
    pub infectious_asym: u64,
    pub infectious_presym: u64,
    pub infectious_sym: u64,
    /// Symptomatic cases currently in hospital, a subset of `infectious_sym`.
    pub hospitalized: u64,
    pub recovered: u64,
    pub dead: u64,
    pub cum_positive_tests: u64,
}

impl From<&DailySummary> for HotspotDaily {
    fn from(d: &DailySummary) -> Self {
        HotspotDaily {
            day: d.day,
            susceptible: d.susceptible,
            exposed: d.exposed,
            infectious_asym: d.infectious_asym,
            infectious_presym: d.infectious_presym,
            infectious_sym: d.infectious_sym,
            hospitalized: d.hospitalized,
            recovered: d.recovered,
            dead: d.dead,
            cum_positive_tests: d.cum_positive_tests,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(HotspotStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Io { .. } => HotspotStatus::Io,
            Error::IllConditioned(_) => HotspotStatus::Runtime,
            _ => HotspotStatus::InvalidInput,
        };
        Failure(status, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> HotspotStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HotspotStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {message}"));
            HotspotStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(HotspotStatus::NullArgument, format!("`{what}` is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(HotspotStatus::InvalidUtf8, format!("`{what}` is not valid UTF-8")))
}

fn build(config: ScenarioConfig) -> Result<Box<HotspotScenario>, Failure> {
    let resolved = config.resolve()?;
    let scenario = CalibScenario {
        tiles: resolved.tiles,
        sites: resolved.sites,
        world: resolved.world,
        sim: resolved.sim,
        downscale: config.population.downscale,
    };
    Ok(Box::new(HotspotScenario { config, scenario }))
}

/// Message of the last failed call on this thread, or null if none failed.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn hotspot_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static, nul-terminated string.
#[no_mangle]
pub extern "C" fn hotspot_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads and validates a scenario file. Relative region paths are resolved
/// against the file's directory.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hotspot_scenario_load(path: *const c_char, out: *mut *mut HotspotScenario) -> HotspotStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = str_arg(path, "path")?;
        let config = ScenarioConfig::load(Path::new(path))?;
        *out = Box::into_raw(build(config)?);
        Ok(())
    })
}

/// Parses and validates a scenario from JSON text. Relative region paths are
/// resolved against the working directory.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hotspot_scenario_from_json(
    json: *const c_char,
    out: *mut *mut HotspotScenario,
) -> HotspotStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let config = ScenarioConfig::from_json(str_arg(json, "json")?)?;
        *out = Box::into_raw(build(config)?);
        Ok(())
    })
}

/// Releases a scenario; null is ignored.
///
/// # Safety
/// `scenario` must come from a `hotspot_scenario_*` constructor and not be
/// used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hotspot_scenario_free(scenario: *mut HotspotScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Simulation horizon in days, or 0 for a null scenario.
///
/// # Safety
/// `scenario` must be null or a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn hotspot_scenario_days(scenario: *const HotspotScenario) -> u32 {
    scenario.as_ref().map_or(0, |s| s.config.horizon_days)
}

/// Number of rollouts the scenario asks for, or 0 for a null scenario.
///
/// # Safety
/// `scenario` must be null or a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn hotspot_scenario_rollouts(scenario: *const HotspotScenario) -> usize {
    scenario.as_ref().map_or(0, |s| s.config.rollouts)
}

/// Runs rollout `index` of the scenario. The seed is derived from the
/// scenario's master seed exactly as the command-line tool does, so the event
/// log matches `rollout_<index>/events.jsonl` of a `simulate` run.
///
/// # Safety
/// `scenario` must be a live scenario handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hotspot_simulate(
    scenario: *const HotspotScenario,
    index: u32,
    out: *mut *mut HotspotRollout,
) -> HotspotStatus {
    guard(|| {
        let s = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let seed = mix(s.config.seed, index as u64);
        let world = s.scenario.world(seed)?;
        let rollout = run_simulation(&world, &s.scenario.sim, seed)?;
        let daily = rollout.log.daily_summary(world.len(), s.config.horizon_days);
        *out = Box::into_raw(Box::new(HotspotRollout {
            seed,
            population: world.len(),
            log: rollout.log,
            daily,
        }));
        Ok(())
    })
}

/// Releases a rollout; null is ignored.
///
/// # Safety
/// `rollout` must come from `hotspot_simulate` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hotspot_rollout_free(rollout: *mut HotspotRollout) {
    if !rollout.is_null() {
        drop(Box::from_raw(rollout));
    }
}

/// Seed the rollout was simulated with, or 0 for a null rollout.
///
/// # Safety
/// `rollout` must be null or a live rollout handle.
#[no_mangle]
pub unsafe extern "C" fn hotspot_rollout_seed(rollout: *const HotspotRollout) -> u64 {
    rollout.as_ref().map_or(0, |r| r.seed)
}

/// Number of individuals in the rollout's world.
///
/// # Safety
/// `rollout` must be null or a live rollout handle.
#[no_mangle]
pub unsafe extern "C" fn hotspot_rollout_population(rollout: *const HotspotRollout) -> usize {
    rollout.as_ref().map_or(0, |r| r.population)
}

/// Number of logged events.
///
/// # Safety
/// `rollout` must be null or a live rollout handle.
#[no_mangle]
pub unsafe extern "C" fn hotspot_rollout_num_events(rollout: *const HotspotRollout) -> usize {
    rollout.as_ref().map_or(0, |r| r.log.len())
}

/// Number of daily rows available from `hotspot_rollout_daily`.
///
/// # Safety
/// `rollout` must be null or a live rollout handle.
#[no_mangle]
pub unsafe extern "C" fn hotspot_rollout_num_days(rollout: *const HotspotRollout) -> usize {
    rollout.as_ref().map_or(0, |r| r.daily.len())
}

/// Copies up to `capacity` daily rows into `buf` and stores the number
/// copied in `written`.
///
/// # Safety
/// `rollout` must be a live rollout handle, `buf` must have room for
/// `capacity` rows (it may be null when `capacity` is 0) and `written` must be
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hotspot_rollout_daily(
    rollout: *const HotspotRollout,
    buf: *mut HotspotDaily,
    capacity: usize,
    written: *mut usize,
) -> HotspotStatus {
    guard(|| {
        let r = rollout.as_ref().ok_or_else(|| null("rollout"))?;
        if written.is_null() {
            return Err(null("written"));
        }
        if buf.is_null() && capacity > 0 {
            return Err(null("buf"));
        }
        let n = capacity.min(r.daily.len());
        for (k, d) in r.daily[..n].iter().enumerate() {
            buf.add(k).write(d.into());
        }
        *written = n;
        Ok(())
    })
}

/// Writes the event log as JSON lines to `path`.
///
/// # Safety
/// `rollout` must be a live rollout handle and `path` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn hotspot_rollout_write_events(
    rollout: *const HotspotRollout,
    path: *const c_char,
) -> HotspotStatus {
    guard(|| {
        let r = rollout.as_ref().ok_or_else(|| null("rollout"))?;
        let path = str_arg(path, "path")?;
        r.log.save(Path::new(path))?;
        Ok(())
    })
}
