//! Error types shared across the crate.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Parameter set violates one or more model invariants.
    #[error("invalid parameters:\n{0}")]
    InvalidParams(String),

    /// A belt section length became non-positive (stiffness singularity).
    #[error("belt section {section} has non-positive length at carriage position x4 = {x4} m")]
    BeltSection { section: u8, x4: f64 },

    /// Kinematic limits cannot produce a feasible motion profile.
    #[error("infeasible motion limits: {0}")]
    InfeasibleLimits(String),

    /// Time outside the profile horizon.
    #[error("time {t} s outside profile horizon [0, {total}] s")]
    TimeOutOfRange { t: f64, total: f64 },

    /// State and model dimensions disagree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The integrator drove the carriage out of the validated travel range.
    #[error("carriage left validated travel range at t = {t} s (x4 = {x4} m)")]
    OutOfTravel { t: f64, x4: f64 },

    /// A non-finite value appeared during integration.
    #[error("non-finite state at t = {t} s ({detail})")]
    NonFinite { t: f64, detail: String },

    /// A state vector was constructed with a NaN or infinite entry.
    #[error("state vector contains a non-finite entry")]
    NonFiniteState,

    /// Adaptive integration could not satisfy the tolerances.
    #[error("step size underflow at t = {t} s (h = {h})")]
    StepUnderflow { t: f64, h: f64 },

    /// One or more study cases failed to simulate.
    #[error("{0}")]
    CaseFailures(String),

    /// Bad solver settings.
    #[error("invalid integrator configuration: {0}")]
    InvalidSimConfig(String),

    /// Trajectory does not cover the motion horizon the metrics need.
    #[error("trajectory ends at {have} s but the profile runs to {need} s")]
    HorizonMismatch { have: f64, need: f64 },

    /// DOE plan does not form a complete design.
    #[error("incomplete experiment plan: {0}")]
    IncompletePlan(String),

    /// Parameter search could not evaluate any candidate.
    #[error("tuning failed: {0}")]
    TuningFailed(String),

    /// Configuration document could not be parsed.
    #[error("config parse error: {0}")]
    ConfigParse(String),

    /// Configuration value out of range or inconsistent.
    #[error("config error: {0}")]
    ConfigValue(String),

    /// Trajectory file could not be parsed.
    #[error("{path}: {detail}")]
    TrajectoryFormat { path: PathBuf, detail: String },

    /// Two trajectories cannot be compared sample-by-sample.
    #[error("trajectories are not comparable: {0}")]
    Incomparable(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code for the CLI: 1 for validation/config problems,
    /// 2 for simulation failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParams(_)
            | Error::InfeasibleLimits(_)
            | Error::InvalidSimConfig(_)
            | Error::IncompletePlan(_)
            | Error::ConfigParse(_)
            | Error::ConfigValue(_)
            | Error::DimensionMismatch { .. }
            | Error::HorizonMismatch { .. }
            | Error::TrajectoryFormat { .. }
            | Error::Incomparable(_)
            | Error::Io { .. } => 1,
            Error::BeltSection { .. }
            | Error::TimeOutOfRange { .. }
            | Error::OutOfTravel { .. }
            | Error::NonFinite { .. }
            | Error::NonFiniteState
            | Error::StepUnderflow { .. }
            | Error::CaseFailures(_)
            | Error::TuningFailed(_) => 2,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
