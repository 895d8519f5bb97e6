//! Vibration dynamics of a Cartesian FFF printer gantry.
//!
//! The machine is modelled as a chain of sprung masses (mount, frame,
//! gantry) carrying a belt drive: two pulleys, three belt sections whose
//! stiffness depends on the instantaneous carriage position, and the
//! extruder carriage itself. An optional tuned mass damper hangs off the
//! carriage. The crate simulates a back-and-forth print move under the
//! rigid-machine input torque, measures how far the real carriage strays
//! from the ideal motion, and searches damper parameters that shrink that
//! error.
//!
//! Start with [`config::Config`] for a ready-to-run parameter set, or wire
//! the pieces directly:
//!
//! ```
//! use gantry_sim::{
//!     build_ideal_profile, simulate, torque_profile, tracking_metrics,
//!     GantryModel, GantryParams, KinematicLimits, SimConfig, State, StateDim,
//! };
//!
//! let params = GantryParams::default();
//! let profile = build_ideal_profile(&KinematicLimits::default()).unwrap();
//! let torque = torque_profile(&profile, &params);
//! let model = GantryModel::new(params, None);
//! let cfg = SimConfig { dt: 1e-4, ..SimConfig::default() };
//! let traj = simulate(&model, &torque, &State::zeros(StateDim::Baseline), &cfg).unwrap();
//! let metrics = tracking_metrics(&traj, &profile).unwrap();
//! assert!(metrics.rms_pos_error > 0.0);
//! ```

pub mod analysis;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod integrator;
pub mod motion;
pub mod output;
pub mod params;
pub mod stability;

pub use analysis::{
    main_effects, run_doe, tracking_metrics, tune_tmd, CaseMetrics, DoeCaseResult, DoePlan,
    MainEffects, TuneOptions, TuneResult,
};
pub use config::Config;
pub use dynamics::{
    assemble_matrices, deriv_three_mass, mechanical_energy, observe, BeltMode, GantryModel,
    State, StateDim, SystemMatrices,
};
pub use error::{Error, Result};
pub use integrator::{rk4_step, simulate, Method, SimConfig, Trajectory, SETTLING_TAIL};
pub use motion::{
    build_ideal_profile, drive_torque_gain, ideal_state_at, reference_state_at, torque_profile,
    IdealProfile, KinematicLimits, TorqueProfile,
};
pub use params::{
    belt_state, belt_stiffness_fixed, belt_stiffness_moving, pulley_inertia, validate_params,
    BeltState, GantryParams, TmdParams, ValidationReport,
};
pub use stability::system_eigenvalues;
