//! Ideal (rigid-machine) carriage kinematics for one back-and-forth print
//! pass, and the input torque that would produce them.
//!
//! The pass is a trapezoidal velocity profile: accelerate, cruise,
//! decelerate over `distance`, dwell for the Z hop, then mirror back to the
//! origin. Limits are given in printer-firmware units (mm-based); the
//! profile itself is SI.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{pulley_inertia, GantryParams};

/// Firmware-style kinematic limits. `jerk` is a junction-velocity
/// allowance (mm/s): the velocity step permitted at motion start/stop,
/// not a true jerk limit. Acceleration changes are instantaneous.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicLimits {
    /// Machine acceleration cap (mm/s²); validation only.
    pub a_max: f64,
    /// Print-move acceleration (mm/s²).
    pub a_print: f64,
    /// Print-move cruise velocity (mm/s).
    pub v_print: f64,
    /// Junction velocity allowance (mm/s); 0 disables the step.
    pub jerk: f64,
    /// One-way print distance (mm).
    pub distance: f64,
    /// Dwell between the forward and return passes (s).
    pub z_hop_time: f64,
}

impl Default for KinematicLimits {
    /// Reference print move: 300 mm/s² at 150 mm/s over 180 mm with a
    /// 0.04 s Z hop. The junction step defaults to zero so the trapezoid
    /// arithmetic is exact; set `jerk` to use the firmware allowance.
    fn default() -> Self {
        KinematicLimits {
            a_max: 1000.0,
            a_print: 300.0,
            v_print: 150.0,
            jerk: 0.0,
            distance: 180.0,
            z_hop_time: 0.04,
        }
    }
}

impl KinematicLimits {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.a_print > 0.0) {
            problems.push(format!("a_print must be positive (got {})", self.a_print));
        }
        if !(self.a_print <= self.a_max) {
            problems.push(format!(
                "a_print ({}) exceeds a_max ({})",
                self.a_print, self.a_max
            ));
        }
        if !(self.v_print > 0.0) {
            problems.push(format!("v_print must be positive (got {})", self.v_print));
        }
        if !(self.distance > 0.0) {
            problems.push(format!("distance must be positive (got {})", self.distance));
        }
        if !(self.z_hop_time >= 0.0) {
            problems.push(format!(
                "z_hop_time must be non-negative (got {})",
                self.z_hop_time
            ));
        }
        if !(self.jerk >= 0.0 && self.jerk < self.v_print) {
            problems.push(format!(
                "jerk must satisfy 0 <= jerk < v_print (got {})",
                self.jerk
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InfeasibleLimits(problems.join("; ")))
        }
    }

    /// One-way travel in metres.
    pub fn travel_m(&self) -> f64 {
        self.distance / 1000.0
    }
}

/// One constant-acceleration piece of the profile (SI units).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSegment {
    /// Segment start time (s).
    pub start: f64,
    /// Segment duration (s).
    pub duration: f64,
    /// Constant acceleration over the segment (m/s²).
    pub accel: f64,
    /// Velocity at segment start (m/s).
    pub v0: f64,
    /// Position at segment start (m).
    pub x0: f64,
}

impl ProfileSegment {
    fn end(&self) -> f64 {
        self.start + self.duration
    }

    fn eval(&self, t: f64) -> (f64, f64, f64) {
        let tau = t - self.start;
        (
            self.x0 + self.v0 * tau + 0.5 * self.accel * tau * tau,
            self.v0 + self.accel * tau,
            self.accel,
        )
    }
}

/// Piecewise-constant-acceleration kinematic profile for the full
/// forward/dwell/return pass. Starts and ends at x = 0, at rest.
#[derive(Debug, Clone, PartialEq)]
pub struct IdealProfile {
    pub segments: Vec<ProfileSegment>,
    pub total_duration: f64,
    /// Junction velocity step applied at motion start/stop (m/s).
    pub junction_step: f64,
    /// The velocity reversal: forward deceleration start through return
    /// acceleration end. First of the two transition regions the velocity
    /// metrics focus on.
    pub reversal_window: (f64, f64),
    /// Start of the final deceleration to rest; the second transition
    /// region runs from here to the end of the simulation horizon.
    pub final_decel_start: f64,
}

impl IdealProfile {
    /// Times at which the acceleration (and hence torque) changes.
    pub fn boundaries(&self) -> Vec<f64> {
        let mut t: Vec<f64> = self.segments.iter().map(|s| s.start).collect();
        t.push(self.total_duration);
        t
    }

    fn segment_at(&self, t: f64) -> &ProfileSegment {
        // Boundaries belong to the later segment.
        let idx = self
            .segments
            .partition_point(|s| s.start <= t)
            .saturating_sub(1);
        &self.segments[idx]
    }
}

/// Build the two-pass profile. Degrades to a triangular (zero-cruise)
/// profile when `v_print` is unreachable within the distance.
pub fn build_ideal_profile(lim: &KinematicLimits) -> Result<IdealProfile> {
    lim.validate()?;
    let a = lim.a_print / 1000.0;
    let v_cruise = lim.v_print / 1000.0;
    let d = lim.distance / 1000.0;
    let vj = lim.jerk / 1000.0;

    // Peak velocity actually reached: limited by the distance available
    // for the accelerate/decelerate pair.
    let v_reachable = (vj * vj + a * d).sqrt();
    let v_peak = v_cruise.min(v_reachable);

    let t_accel = (v_peak - vj) / a;
    let d_accel = (v_peak * v_peak - vj * vj) / (2.0 * a);
    let d_cruise = (d - 2.0 * d_accel).max(0.0);
    let t_cruise = if v_peak < v_cruise {
        0.0
    } else {
        d_cruise / v_peak
    };
    let t_pass = 2.0 * t_accel + t_cruise;
    let total = 2.0 * t_pass + lim.z_hop_time;

    let mut segments = Vec::with_capacity(7);
    let mut push = |start: f64, duration: f64, accel: f64, v0: f64, x0: f64| {
        if duration > 0.0 {
            segments.push(ProfileSegment {
                start,
                duration,
                accel,
                v0,
                x0,
            });
        }
    };

    // Forward pass.
    push(0.0, t_accel, a, vj, 0.0);
    push(t_accel, t_cruise, 0.0, v_peak, d_accel);
    push(t_accel + t_cruise, t_accel, -a, v_peak, d - d_accel);
    // Z hop: zero-torque dwell at the far end.
    push(t_pass, lim.z_hop_time, 0.0, 0.0, d);
    // Return pass, mirrored.
    let t_ret = t_pass + lim.z_hop_time;
    push(t_ret, t_accel, -a, -vj, d);
    push(t_ret + t_accel, t_cruise, 0.0, -v_peak, d - d_accel);
    push(t_ret + t_accel + t_cruise, t_accel, a, -v_peak, d_accel);

    Ok(IdealProfile {
        segments,
        total_duration: total,
        junction_step: vj,
        reversal_window: (t_accel + t_cruise, t_ret + t_accel),
        final_decel_start: t_ret + t_accel + t_cruise,
    })
}

/// Closed-form evaluation of the profile: position (m), velocity (m/s),
/// acceleration (m/s²) at time `t`. Errors outside `[0, total]`.
pub fn ideal_state_at(prof: &IdealProfile, t: f64) -> Result<(f64, f64, f64)> {
    if !(0.0..=prof.total_duration).contains(&t) {
        return Err(Error::TimeOutOfRange {
            t,
            total: prof.total_duration,
        });
    }
    if t == prof.total_duration {
        // The pass is over: position from the last segment's end, velocity
        // already stepped down to rest across the final junction.
        let last = prof.segments.last().expect("profile has segments");
        let (x, _, _) = last.eval(last.end());
        return Ok((x, 0.0, 0.0));
    }
    Ok(prof.segment_at(t).eval(t))
}

/// Reference signal for tracking metrics: the profile while it lasts, rest
/// at the origin afterwards.
pub fn reference_state_at(prof: &IdealProfile, t: f64) -> (f64, f64, f64) {
    if t >= prof.total_duration {
        (0.0, 0.0, 0.0)
    } else {
        prof.segment_at(t.max(0.0)).eval(t.max(0.0))
    }
}

/// Piecewise-constant input torque over the profile horizon; zero afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct TorqueProfile {
    /// One entry per profile segment: (start time, torque N·m).
    pub segments: Vec<(f64, f64)>,
    pub total_duration: f64,
}

impl TorqueProfile {
    /// Torque at time `t`; boundaries belong to the later segment, zero
    /// outside the profile horizon.
    pub fn torque_at(&self, t: f64) -> f64 {
        if t < 0.0 || t >= self.total_duration {
            return 0.0;
        }
        let idx = self
            .segments
            .partition_point(|&(start, _)| start <= t)
            .saturating_sub(1);
        self.segments[idx].1
    }

    /// Times at which the torque jumps (useful for step-size control).
    pub fn boundaries(&self) -> Vec<f64> {
        let mut t: Vec<f64> = self.segments.iter().map(|&(s, _)| s).collect();
        t.push(self.total_duration);
        t
    }
}

/// Torque needed per unit of rigid-machine carriage acceleration (N·m·s²/m):
/// carriage mass plus both pulley inertias reflected through the radius.
pub fn drive_torque_gain(p: &GantryParams) -> f64 {
    let j4 = pulley_inertia(p.m4, p.r);
    let j5 = pulley_inertia(p.m5, p.r);
    p.m6 * p.r + (j4 + j5) / p.r
}

/// Input torque reproducing the ideal motion on a rigid machine.
///
/// Positive pulley rotation tensions the belt span behind the carriage and
/// pulls it backwards, so driving the carriage forward takes torque of the
/// opposite sign to the commanded acceleration: `T(t) = -gain · a(t)`.
pub fn torque_profile(prof: &IdealProfile, p: &GantryParams) -> TorqueProfile {
    let gain = drive_torque_gain(p);
    TorqueProfile {
        segments: prof
            .segments
            .iter()
            .map(|s| (s.start, -gain * s.accel))
            .collect(),
        total_duration: prof.total_duration,
    }
}
