//! C ABI for the gantry vibration simulator.
//!
//! Conventions:
//!
//! * Handles (`GsimConfig`, `GsimTrajectory`) are opaque; create them
//!   through this API and release them with the matching `_free` call.
//! * Every fallible call returns a [`GsimStatus`]; on failure,
//!   [`gsim_last_error_message`] holds a human-readable description for
//!   the current thread until the next failing call.
//! * Output buffers are caller-allocated; pass their capacity. Sizes can
//!   be queried first (`gsim_trajectory_rows`, `gsim_trajectory_state_dim`).
//! * No call panics across the boundary.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::path::PathBuf;

use libc::{c_char, size_t};

use gantry_sim::{
    build_ideal_profile, simulate, torque_profile, tracking_metrics, CaseMetrics, Config, Error,
    GantryModel, IdealProfile, State, TmdParams, Trajectory,
};

/// Outcome of a C API call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsimStatus {
    Ok = 0,
    /// A pointer argument was null or a buffer too small.
    InvalidArgument = 1,
    /// Configuration could not be parsed or failed validation.
    Config = 2,
    /// The simulation itself failed (travel range, non-finite state, ...).
    Simulation = 3,
    /// Filesystem problem while writing results.
    Io = 4,
}

/// Carriage tracking-error metrics, mirrored from the core crate.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GsimMetrics {
    /// RMS position error vs the ideal motion (m).
    pub rms_pos_error: f64,
    /// Peak absolute position error (m).
    pub max_abs_pos_error: f64,
    /// RMS velocity error (m/s).
    pub rms_vel_error: f64,
    /// Peak velocity excursion in the transition regions (m/s).
    pub transition_overshoot: f64,
    /// Time for the position error to stay inside the settle band (s).
    pub settle_time: f64,
}

impl From<CaseMetrics> for GsimMetrics {
    fn from(m: CaseMetrics) -> Self {
        GsimMetrics {
            rms_pos_error: m.rms_pos_error,
            max_abs_pos_error: m.max_abs_pos_error,
            rms_vel_error: m.rms_vel_error,
            transition_overshoot: m.transition_overshoot,
            settle_time: m.settle_time,
        }
    }
}

/// Opaque run configuration handle.
pub struct GsimConfig {
    inner: Config,
}

/// Opaque simulated-trajectory handle (states plus the ideal profile they
/// were commanded to follow).
pub struct GsimTrajectory {
    trajectory: Trajectory,
    profile: IdealProfile,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(e: &Error) -> GsimStatus {
    match e {
        Error::Io { .. } => GsimStatus::Io,
        other => match other.exit_code() {
            1 => GsimStatus::Config,
            _ => GsimStatus::Simulation,
        },
    }
}

fn fail(e: &Error) -> GsimStatus {
    set_error(&e.to_string());
    status_of(e)
}

fn invalid(message: &str) -> GsimStatus {
    set_error(message);
    GsimStatus::InvalidArgument
}

/// Message describing the most recent failure on this thread. Valid until
/// the next failing call; never null.
#[no_mangle]
pub extern "C" fn gsim_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn gsim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Create a configuration with the reference machine defaults.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gsim_config_default(out: *mut *mut GsimConfig) -> GsimStatus {
    if out.is_null() {
        return invalid("out pointer is null");
    }
    let handle = Box::new(GsimConfig {
        inner: Config::default(),
    });
    unsafe { *out = Box::into_raw(handle) };
    GsimStatus::Ok
}

/// Parse a TOML configuration document.
///
/// # Safety
/// `text` must be a valid NUL-terminated string, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gsim_config_parse(
    text: *const c_char,
    out: *mut *mut GsimConfig,
) -> GsimStatus {
    if text.is_null() || out.is_null() {
        return invalid("null pointer argument");
    }
    let text = match unsafe { CStr::from_ptr(text) }.to_str() {
        Ok(t) => t,
        Err(_) => return invalid("configuration text is not valid UTF-8"),
    };
    match Config::from_toml(text) {
        Ok(config) => {
            unsafe { *out = Box::into_raw(Box::new(GsimConfig { inner: config })) };
            GsimStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Override the integrator step size (s).
///
/// # Safety
/// `config` must be a live handle from this API.
#[no_mangle]
pub unsafe extern "C" fn gsim_config_set_dt(config: *mut GsimConfig, dt: f64) -> GsimStatus {
    let Some(config) = (unsafe { config.as_mut() }) else {
        return invalid("config handle is null");
    };
    config.inner.sim.dt = dt;
    match config.inner.sim.validate() {
        Ok(()) => GsimStatus::Ok,
        Err(e) => fail(&e),
    }
}

/// Attach (or replace) the carriage damper.
///
/// # Safety
/// `config` must be a live handle from this API.
#[no_mangle]
pub unsafe extern "C" fn gsim_config_set_damper(
    config: *mut GsimConfig,
    m7: f64,
    k7: f64,
    beta7: f64,
) -> GsimStatus {
    let Some(config) = (unsafe { config.as_mut() }) else {
        return invalid("config handle is null");
    };
    let tmd = TmdParams::new(m7, k7, beta7);
    match tmd.validate() {
        Ok(()) => {
            config.inner.tmd = Some(tmd);
            GsimStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Remove the carriage damper: simulations use the 12-state bare machine.
///
/// # Safety
/// `config` must be a live handle from this API.
#[no_mangle]
pub unsafe extern "C" fn gsim_config_remove_damper(config: *mut GsimConfig) -> GsimStatus {
    let Some(config) = (unsafe { config.as_mut() }) else {
        return invalid("config handle is null");
    };
    config.inner.tmd = None;
    GsimStatus::Ok
}

/// Release a configuration handle. Null is a no-op.
///
/// # Safety
/// `config` must have come from this API and not been freed before.
#[no_mangle]
pub unsafe extern "C" fn gsim_config_free(config: *mut GsimConfig) {
    if !config.is_null() {
        drop(unsafe { Box::from_raw(config) });
    }
}

/// Simulate the configured print move from rest and return a trajectory
/// handle.
///
/// # Safety
/// `config` must be a live handle, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gsim_simulate(
    config: *const GsimConfig,
    out: *mut *mut GsimTrajectory,
) -> GsimStatus {
    let Some(config) = (unsafe { config.as_ref() }) else {
        return invalid("config handle is null");
    };
    if out.is_null() {
        return invalid("out pointer is null");
    }
    let run = || -> gantry_sim::Result<GsimTrajectory> {
        let c = &config.inner;
        c.validate()?;
        let profile = build_ideal_profile(&c.limits)?;
        let torque = torque_profile(&profile, &c.gantry);
        let model = GantryModel::new(c.gantry, c.tmd);
        let z0 = State::zeros(model.state_dim());
        let trajectory = simulate(&model, &torque, &z0, &c.sim)?;
        Ok(GsimTrajectory {
            trajectory,
            profile,
        })
    };
    match run() {
        Ok(handle) => {
            unsafe { *out = Box::into_raw(Box::new(handle)) };
            GsimStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Number of recorded samples.
///
/// # Safety
/// `trajectory` must be a live handle; null returns 0.
#[no_mangle]
pub unsafe extern "C" fn gsim_trajectory_rows(trajectory: *const GsimTrajectory) -> size_t {
    unsafe { trajectory.as_ref() }.map_or(0, |t| t.trajectory.len())
}

/// State dimension per sample: 12 without the damper, 14 with it.
///
/// # Safety
/// `trajectory` must be a live handle; null returns 0.
#[no_mangle]
pub unsafe extern "C" fn gsim_trajectory_state_dim(
    trajectory: *const GsimTrajectory,
) -> size_t {
    unsafe { trajectory.as_ref() }.map_or(0, |t| t.trajectory.state_dim())
}

/// Copy the sample times (s) into `buf`.
///
/// # Safety
/// `buf` must point to at least `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn gsim_trajectory_times(
    trajectory: *const GsimTrajectory,
    buf: *mut f64,
    len: size_t,
) -> GsimStatus {
    let Some(t) = (unsafe { trajectory.as_ref() }) else {
        return invalid("trajectory handle is null");
    };
    if buf.is_null() || len < t.trajectory.len() {
        return invalid("times buffer is null or too small");
    }
    let times = &t.trajectory.times;
    unsafe { std::ptr::copy_nonoverlapping(times.as_ptr(), buf, times.len()) };
    GsimStatus::Ok
}

/// Copy one state sample (ordering `x1, x1_dot, ..., theta5, theta5_dot
/// [, x5, x5_dot]`) into `buf`.
///
/// # Safety
/// `buf` must point to at least `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn gsim_trajectory_state(
    trajectory: *const GsimTrajectory,
    row: size_t,
    buf: *mut f64,
    len: size_t,
) -> GsimStatus {
    let Some(t) = (unsafe { trajectory.as_ref() }) else {
        return invalid("trajectory handle is null");
    };
    let Some(state) = t.trajectory.states.get(row) else {
        return invalid("row index out of range");
    };
    if buf.is_null() || len < state.len() {
        return invalid("state buffer is null or too small");
    }
    let slice = state.as_slice();
    unsafe { std::ptr::copy_nonoverlapping(slice.as_ptr(), buf, slice.len()) };
    GsimStatus::Ok
}

/// Tracking-error metrics of the carriage against the ideal motion.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gsim_trajectory_metrics(
    trajectory: *const GsimTrajectory,
    out: *mut GsimMetrics,
) -> GsimStatus {
    let Some(t) = (unsafe { trajectory.as_ref() }) else {
        return invalid("trajectory handle is null");
    };
    if out.is_null() {
        return invalid("out pointer is null");
    }
    match tracking_metrics(&t.trajectory, &t.profile) {
        Ok(metrics) => {
            unsafe { *out = metrics.into() };
            GsimStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Write the trajectory as CSV (same schema as the command-line tool).
///
/// # Safety
/// `path` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gsim_trajectory_write_csv(
    trajectory: *const GsimTrajectory,
    path: *const c_char,
) -> GsimStatus {
    let Some(t) = (unsafe { trajectory.as_ref() }) else {
        return invalid("trajectory handle is null");
    };
    if path.is_null() {
        return invalid("path is null");
    }
    let path = match unsafe { CStr::from_ptr(path) }.to_str() {
        Ok(p) => PathBuf::from(p),
        Err(_) => return invalid("path is not valid UTF-8"),
    };
    match gantry_sim::output::write_trajectory(&t.trajectory, &t.profile, &path) {
        Ok(()) => GsimStatus::Ok,
        Err(e) => fail(&e),
    }
}

/// Release a trajectory handle. Null is a no-op.
///
/// # Safety
/// `trajectory` must have come from this API and not been freed before.
#[no_mangle]
pub unsafe extern "C" fn gsim_trajectory_free(trajectory: *mut GsimTrajectory) {
    if !trajectory.is_null() {
        drop(unsafe { Box::from_raw(trajectory) });
    }
}
