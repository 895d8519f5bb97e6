//! Explicit time integration of the gantry equations under a torque input.
//!
//! Two schemes: classical fixed-step RK4 and adaptive RKF45 (Fehlberg 4/5
//! embedded pair). Both re-evaluate the position-dependent belt stiffness
//! inside every stage, and both look the input torque up at the exact stage
//! time. Everything is deterministic: identical inputs give bit-identical
//! trajectories on a fixed platform.

use serde::{Deserialize, Serialize};

use crate::dynamics::{GantryModel, State};
use crate::error::{Error, Result};
use crate::motion::TorqueProfile;

/// Settling time appended after the motion profile when `t_end` is not set,
/// so post-move oscillation shows up in the metrics.
pub const SETTLING_TAIL: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rk4,
    Rkf45,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Rk4 => "rk4",
            Method::Rkf45 => "rkf45",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rk4" => Ok(Method::Rk4),
            "rkf45" => Ok(Method::Rkf45),
            other => Err(Error::InvalidSimConfig(format!(
                "unknown method '{other}' (expected rk4 or rkf45)"
            ))),
        }
    }
}

/// Integration settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Fixed step size for rk4; initial step for rkf45 (s). The fastest
    /// belt/pulley mode sits near 700 Hz, so the 1e-5 s default gives well
    /// over a hundred steps per period.
    pub dt: f64,
    /// Simulation horizon (s); `None` runs to the torque-profile end plus
    /// [`SETTLING_TAIL`].
    pub t_end: Option<f64>,
    pub method: Method,
    /// Relative tolerance (rkf45 only).
    pub rel_tol: f64,
    /// Absolute tolerance (rkf45 only).
    pub abs_tol: f64,
    /// Record every Nth step (rk4) / every Nth output-grid point (rkf45).
    pub output_stride: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 1e-5,
            t_end: None,
            method: Method::Rk4,
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            output_stride: 10,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::InvalidSimConfig(format!(
                "dt must be positive (got {})",
                self.dt
            )));
        }
        if let Some(t_end) = self.t_end {
            if !(t_end > 0.0) {
                return Err(Error::InvalidSimConfig(format!(
                    "t_end must be positive (got {t_end})"
                )));
            }
        }
        if self.method == Method::Rkf45 && !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidSimConfig(format!(
                "adaptive tolerances must be positive (got rel {}, abs {})",
                self.rel_tol, self.abs_tol
            )));
        }
        if self.output_stride == 0 {
            return Err(Error::InvalidSimConfig(
                "output_stride must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Simulation metadata carried alongside the numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub method: String,
    pub dt: f64,
    /// FNV-1a digest of the model parameters that produced the run.
    pub params_digest: String,
}

/// Time-stamped simulated states plus the torque that was applied.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub torques: Vec<f64>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state_dim(&self) -> usize {
        self.states.first().map_or(0, |s| s.len())
    }

    /// Final simulated time (s).
    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("trajectory is never empty")
    }
}

/// One classical Runge-Kutta step of size `h` from `(t, z)`.
///
/// The derivative is evaluated at all four stages, so state-dependent
/// stiffness is re-sampled inside the step.
pub fn rk4_step<F>(f: &mut F, t: f64, z: &State, h: f64) -> Result<State>
where
    F: FnMut(f64, &State) -> Result<State>,
{
    let check = |stage: u8, k: &State| -> Result<()> {
        if k.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite {
                t,
                detail: format!("rk4 stage {stage} derivative"),
            })
        }
    };
    let k1 = f(t, z)?;
    check(1, &k1)?;
    let k2 = f(t + 0.5 * h, &z.add_scaled(0.5 * h, &k1))?;
    check(2, &k2)?;
    let k3 = f(t + 0.5 * h, &z.add_scaled(0.5 * h, &k2))?;
    check(3, &k3)?;
    let k4 = f(t + h, &z.add_scaled(h, &k3))?;
    check(4, &k4)?;

    let mut out = *z;
    let sixth = h / 6.0;
    for i in 0..z.len() {
        out[i] += sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(out)
}

/// Fehlberg 4(5) embedded step: returns the 5th-order update and the scaled
/// error-norm estimate (accept when <= 1).
fn rkf45_step<F>(
    f: &mut F,
    t: f64,
    z: &State,
    h: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<(State, f64)>
where
    F: FnMut(f64, &State) -> Result<State>,
{
    let k1 = f(t, z)?;
    let k2 = f(t + h / 4.0, &z.add_scaled(h / 4.0, &k1))?;
    let mut y = *z;
    for i in 0..z.len() {
        y[i] = z[i] + h * (3.0 / 32.0 * k1[i] + 9.0 / 32.0 * k2[i]);
    }
    let k3 = f(t + 3.0 * h / 8.0, &y)?;
    for i in 0..z.len() {
        y[i] = z[i]
            + h * (1932.0 / 2197.0 * k1[i] - 7200.0 / 2197.0 * k2[i]
                + 7296.0 / 2197.0 * k3[i]);
    }
    let k4 = f(t + 12.0 * h / 13.0, &y)?;
    for i in 0..z.len() {
        y[i] = z[i]
            + h * (439.0 / 216.0 * k1[i] - 8.0 * k2[i] + 3680.0 / 513.0 * k3[i]
                - 845.0 / 4104.0 * k4[i]);
    }
    let k5 = f(t + h, &y)?;
    for i in 0..z.len() {
        y[i] = z[i]
            + h * (-8.0 / 27.0 * k1[i] + 2.0 * k2[i] - 3544.0 / 2565.0 * k3[i]
                + 1859.0 / 4104.0 * k4[i]
                - 11.0 / 40.0 * k5[i]);
    }
    let k6 = f(t + h / 2.0, &y)?;

    let mut z5 = *z;
    let mut err_norm: f64 = 0.0;
    for i in 0..z.len() {
        let fourth = 25.0 / 216.0 * k1[i] + 1408.0 / 2565.0 * k3[i] + 2197.0 / 4104.0 * k4[i]
            - 1.0 / 5.0 * k5[i];
        let fifth = 16.0 / 135.0 * k1[i] + 6656.0 / 12825.0 * k3[i]
            + 28561.0 / 56430.0 * k4[i]
            - 9.0 / 50.0 * k5[i]
            + 2.0 / 55.0 * k6[i];
        z5[i] = z[i] + h * fifth;
        let err = h * (fifth - fourth);
        let scale = abs_tol + rel_tol * z[i].abs().max(z5[i].abs());
        err_norm = err_norm.max((err / scale).abs());
    }
    if !z5.is_finite() || !err_norm.is_finite() {
        return Err(Error::NonFinite {
            t,
            detail: "rkf45 stage derivative".into(),
        });
    }
    Ok((z5, err_norm))
}

fn digest_model(model: &GantryModel) -> String {
    // FNV-1a over the debug rendering; stable for identical parameters.
    let text = format!("{:?}", model);
    let mut hash: u64 = 0xcbf29ce484222325;
    for byte in text.bytes() {
        hash ^= byte as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    format!("{hash:016x}")
}

/// Integrate the model from `z0` under the torque profile.
///
/// The torque is piecewise constant, so steps are split at its jump times
/// and each piece is integrated with the torque of that piece (sampled at
/// the substep midpoint). Integrating across a jump would degrade the
/// scheme to first order.
///
/// Aborts with the failure time if the carriage leaves the validated travel
/// range (a belt section length would go non-positive) or a state entry
/// stops being finite.
pub fn simulate(
    model: &GantryModel,
    torque: &TorqueProfile,
    z0: &State,
    cfg: &SimConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    if z0.dim() != model.state_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.state_dim().len(),
            got: z0.len(),
        });
    }
    let t_end = cfg
        .t_end
        .unwrap_or(torque.total_duration + SETTLING_TAIL);

    let meta = TrajectoryMeta {
        method: cfg.method.as_str().to_string(),
        dt: cfg.dt,
        params_digest: digest_model(model),
    };

    match cfg.method {
        Method::Rk4 => simulate_rk4(model, torque, z0, cfg, t_end, meta),
        Method::Rkf45 => simulate_rkf45(model, torque, z0, cfg, t_end, meta),
    }
}

fn simulate_rk4(
    model: &GantryModel,
    torque: &TorqueProfile,
    z0: &State,
    cfg: &SimConfig,
    t_end: f64,
    meta: TrajectoryMeta,
) -> Result<Trajectory> {
    let jumps: Vec<f64> = torque
        .boundaries()
        .into_iter()
        .filter(|&b| b > 0.0 && b < t_end)
        .collect();
    let mut next_jump = 0usize;

    let n_steps = ((t_end / cfg.dt) - 1e-9).ceil().max(1.0) as usize;
    let expected_rows = n_steps / cfg.output_stride + 2;
    let mut traj = Trajectory {
        times: Vec::with_capacity(expected_rows),
        states: Vec::with_capacity(expected_rows),
        torques: Vec::with_capacity(expected_rows),
        meta,
    };
    let mut z = *z0;
    traj.times.push(0.0);
    traj.states.push(z);
    traj.torques.push(torque.torque_at(0.0));

    for i in 0..n_steps {
        let t = i as f64 * cfg.dt;
        let t_next = if i + 1 == n_steps {
            t_end
        } else {
            (i + 1) as f64 * cfg.dt
        };
        // Integrate substeps split at the torque jumps inside this step.
        let mut sub_t = t;
        while sub_t < t_next {
            while next_jump < jumps.len() && jumps[next_jump] <= sub_t {
                next_jump += 1;
            }
            let sub_end = if next_jump < jumps.len() && jumps[next_jump] < t_next {
                jumps[next_jump]
            } else {
                t_next
            };
            let tq = torque.torque_at(0.5 * (sub_t + sub_end));
            let mut f = |s: f64, z: &State| -> Result<State> {
                model.deriv(z, tq).map_err(|e| match e {
                    Error::BeltSection { x4, .. } => Error::OutOfTravel { t: s, x4 },
                    other => other,
                })
            };
            z = rk4_step(&mut f, sub_t, &z, sub_end - sub_t)?;
            sub_t = sub_end;
        }
        if !z.is_finite() {
            return Err(Error::NonFinite {
                t: t_next,
                detail: "state after rk4 step".into(),
            });
        }
        if (i + 1) % cfg.output_stride == 0 || i + 1 == n_steps {
            traj.times.push(t_next);
            traj.states.push(z);
            traj.torques.push(torque.torque_at(t_next));
        }
    }
    Ok(traj)
}

fn simulate_rkf45(
    model: &GantryModel,
    torque: &TorqueProfile,
    z0: &State,
    cfg: &SimConfig,
    t_end: f64,
    meta: TrajectoryMeta,
) -> Result<Trajectory> {
    // Output on the same fixed grid rk4 would use, stepping exactly onto
    // grid points and torque discontinuities so steps never straddle a jump.
    let dt_out = cfg.dt * cfg.output_stride as f64;
    let mut events: Vec<f64> = torque
        .boundaries()
        .into_iter()
        .filter(|&b| b > 0.0 && b < t_end)
        .collect();
    let n_out = ((t_end / dt_out) - 1e-9).ceil().max(1.0) as usize;
    events.extend((1..=n_out).map(|k| (k as f64 * dt_out).min(t_end)));
    events.push(t_end);
    events.sort_by(|a, b| a.partial_cmp(b).unwrap());
    events.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let mut traj = Trajectory {
        times: Vec::with_capacity(n_out + 2),
        states: Vec::with_capacity(n_out + 2),
        torques: Vec::with_capacity(n_out + 2),
        meta,
    };
    let mut z = *z0;
    traj.times.push(0.0);
    traj.states.push(z);
    traj.torques.push(torque.torque_at(0.0));

    let is_output = |t: f64| -> bool {
        let k = (t / dt_out).round();
        (t - k * dt_out).abs() < 1e-12 || (t - t_end).abs() < 1e-15
    };

    let mut t = 0.0;
    let mut h = cfg.dt;
    let min_h = cfg.dt * 1e-9;
    for &event in &events {
        while t < event {
            let mut h_try = h.min(event - t);
            loop {
                // Steps never cross an event, so the torque is constant
                // over the step; sample it at the midpoint.
                let tq = torque.torque_at(t + 0.5 * h_try);
                let mut f = |s: f64, z: &State| -> Result<State> {
                    model.deriv(z, tq).map_err(|e| match e {
                        Error::BeltSection { x4, .. } => Error::OutOfTravel { t: s, x4 },
                        other => other,
                    })
                };
                let (z_new, err) = rkf45_step(&mut f, t, &z, h_try, cfg.rel_tol, cfg.abs_tol)?;
                if err <= 1.0 {
                    let hit_event = (t + h_try) >= event - 1e-15;
                    t = if hit_event { event } else { t + h_try };
                    z = z_new;
                    // Grow the step for next time, bounded.
                    let factor = if err > 0.0 {
                        (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                    } else {
                        5.0
                    };
                    h = (h_try * factor).min(dt_out);
                    break;
                }
                h_try *= (0.9 * err.powf(-0.2)).clamp(0.2, 0.9);
                if h_try < min_h {
                    return Err(Error::StepUnderflow { t, h: h_try });
                }
            }
        }
        if is_output(event) {
            traj.times.push(event);
            traj.states.push(z);
            traj.torques.push(torque.torque_at(event));
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::StateDim;
    use crate::motion::{build_ideal_profile, torque_profile};
    use crate::params::GantryParams;
    use crate::KinematicLimits;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn zero_torque(total: f64) -> TorqueProfile {
        TorqueProfile {
            segments: vec![(0.0, 0.0)],
            total_duration: total,
        }
    }

    #[test]
    fn zero_derivative_keeps_state() {
        let z = State::from_slice(&[1.0, -2.0, 3.0, 0.5, 0.1, 0.0, 0.05, 0.0, 1.0, 2.0, 3.0, 4.0])
            .unwrap();
        let mut f = |_t: f64, z: &State| Ok(State::zeros(z.dim()));
        let out = rk4_step(&mut f, 0.0, &z, 0.1).unwrap();
        assert_eq!(out, z);
    }

    #[test]
    fn exponential_growth_matches_series() {
        // Each component obeys dz/dt = z, so one step of h = 0.1 must land
        // on the 4th-order Taylor value of e^0.1.
        let z = State::from_slice(&[1.0; 12]).unwrap();
        let mut f = |_t: f64, z: &State| Ok(*z);
        let out = rk4_step(&mut f, 0.0, &z, 0.1).unwrap();
        let h: f64 = 0.1;
        let expected = 1.0 + h + h * h / 2.0 + h * h * h / 6.0 + h * h * h * h / 24.0;
        assert_relative_eq!(out[0], expected, max_relative = 1e-15);
        assert_relative_eq!(out[0], 1.1051708, max_relative = 1e-7);
    }

    /// Matrix exponential by scaling and squaring with a truncated series.
    fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
        let norm = a.abs().column_sum().max();
        let s = (norm / 0.5).log2().ceil().max(0.0) as i32;
        let b = a / 2f64.powi(s);
        let n = a.nrows();
        let mut result = DMatrix::identity(n, n);
        let mut term = DMatrix::identity(n, n);
        for k in 1..=24 {
            term = &term * &b / k as f64;
            result += &term;
        }
        for _ in 0..s {
            result = &result * &result;
        }
        result
    }

    #[test]
    fn gantry_step_matches_matrix_exponential() {
        // Frozen stiffness makes the system linear; one RK4 step must track
        // e^{Ah} z0 with 5th-order local error.
        let p = GantryParams::default();
        let model = GantryModel::frozen_at(p, None, 0.0);
        let m = crate::dynamics::assemble_matrices(&p, 0.0, None).unwrap();

        let mut z0 = State::zeros(StateDim::Baseline);
        for i in 0..12 {
            z0[i] = 1e-4 * ((i + 1) as f64 * 0.37).sin();
        }

        let err_at = |h: f64| -> f64 {
            let mut f = |_t: f64, z: &State| model.deriv(z, 0.0);
            let rk = rk4_step(&mut f, 0.0, &z0, h).unwrap();
            let exact = expm(&(&m.a * h)) * nalgebra::DVector::from_row_slice(z0.as_slice());
            (0..12)
                .map(|i| (rk[i] - exact[i]).abs())
                .fold(0.0, f64::max)
        };
        let e1 = err_at(8e-6);
        let e2 = err_at(4e-6);
        assert!(e1 > 0.0 && e2 > 0.0);
        let ratio = e1 / e2;
        assert!(
            (20.0..48.0).contains(&ratio),
            "local error should shrink ~32x per halving, got {ratio} ({e1} vs {e2})"
        );
    }

    #[test]
    fn equilibrium_stays_zero() {
        let model = GantryModel::new(GantryParams::default(), None);
        let cfg = SimConfig {
            t_end: Some(0.2),
            ..SimConfig::default()
        };
        let traj = simulate(
            &model,
            &zero_torque(0.2),
            &State::zeros(StateDim::Baseline),
            &cfg,
        )
        .unwrap();
        assert_eq!(traj.times[0], 0.0);
        assert_eq!(traj.states[0], State::zeros(StateDim::Baseline));
        for z in &traj.states {
            assert!(z.as_slice().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn energy_conserved_without_damping() {
        let mut p = GantryParams::default();
        p.beta1 = 0.0;
        p.beta2 = 0.0;
        p.beta3 = 0.0;
        p.beta4 = 0.0;
        p.beta5 = 0.0;
        p.beta6 = 0.0;
        let model = GantryModel::frozen_at(p, None, 0.0);
        let mut z0 = State::zeros(StateDim::Baseline);
        for i in 0..12 {
            z0[i] = 1e-4 * ((3 * i + 1) as f64).sin();
        }
        let cfg = SimConfig {
            t_end: Some(0.1),
            ..SimConfig::default()
        };
        let traj = simulate(&model, &zero_torque(0.1), &z0, &cfg).unwrap();
        let e0 = crate::dynamics::mechanical_energy(&p, None, &z0, 0.0).unwrap();
        assert!(e0 > 0.0);
        for z in &traj.states {
            let e = crate::dynamics::mechanical_energy(&p, None, z, 0.0).unwrap();
            assert!(
                ((e - e0) / e0).abs() < 1e-7,
                "energy drifted: {e} vs {e0}"
            );
        }
    }

    #[test]
    fn simulation_horizon_defaults_to_profile_plus_tail() {
        let p = GantryParams::default();
        let prof = build_ideal_profile(&KinematicLimits::default()).unwrap();
        let tq = torque_profile(&prof, &p);
        let model = GantryModel::new(p, None);
        let cfg = SimConfig {
            dt: 1e-4,
            ..SimConfig::default()
        };
        let traj = simulate(&model, &tq, &State::zeros(StateDim::Baseline), &cfg).unwrap();
        assert_relative_eq!(traj.t_end(), prof.total_duration + SETTLING_TAIL, epsilon = 1e-9);
        assert_eq!(traj.state_dim(), 12);
    }

    #[test]
    fn rkf45_matches_rk4_on_the_reference_scenario() {
        let p = GantryParams::default();
        let prof = build_ideal_profile(&KinematicLimits::default()).unwrap();
        let tq = torque_profile(&prof, &p);
        let model = GantryModel::new(p, None);

        let rel_tol = 1e-6;
        let cfg_fixed = SimConfig {
            dt: 1e-5,
            t_end: Some(1.0),
            output_stride: 1000,
            ..SimConfig::default()
        };
        let cfg_adaptive = SimConfig {
            method: Method::Rkf45,
            rel_tol,
            abs_tol: 1e-12,
            ..cfg_fixed
        };
        let z0 = State::zeros(StateDim::Baseline);
        let fixed = simulate(&model, &tq, &z0, &cfg_fixed).unwrap();
        let adaptive = simulate(&model, &tq, &z0, &cfg_adaptive).unwrap();
        assert_eq!(fixed.times.len(), adaptive.times.len());

        let mut scale = [0f64; 12];
        for z in &fixed.states {
            for i in 0..12 {
                scale[i] = scale[i].max(z[i].abs());
            }
        }
        for (row, (za, zb)) in fixed.states.iter().zip(&adaptive.states).enumerate() {
            assert!(
                (fixed.times[row] - adaptive.times[row]).abs() < 1e-9,
                "output grids diverged"
            );
            for i in 0..12 {
                let tol = 10.0 * (rel_tol * scale[i] + 1e-12);
                assert!(
                    (za[i] - zb[i]).abs() <= tol,
                    "row {row} state {i}: {} vs {}",
                    za[i],
                    zb[i]
                );
            }
        }
    }

    #[test]
    fn end_state_returns_home_and_is_grid_converged() {
        // After the return pass and the settling tail the bare carriage is
        // back near the origin, and the end state is insensitive to dt.
        let p = GantryParams::default();
        let prof = build_ideal_profile(&KinematicLimits::default()).unwrap();
        let tq = torque_profile(&prof, &p);
        let model = GantryModel::new(p, None);
        let z0 = State::zeros(StateDim::Baseline);
        let end_at = |dt: f64| {
            let cfg = SimConfig {
                dt,
                output_stride: usize::MAX,
                ..SimConfig::default()
            };
            *simulate(&model, &tq, &z0, &cfg).unwrap().states.last().unwrap()
        };
        let a = end_at(1e-4);
        let b = end_at(5e-5);
        assert!(a.x4().abs() < 1e-5, "final x4 = {}", a.x4());
        assert!(
            (a.x4() - b.x4()).abs() < 1e-9,
            "end state not grid-converged: {} vs {}",
            a.x4(),
            b.x4()
        );
    }

    #[test]
    fn identical_runs_are_bit_identical() {
        let p = GantryParams::default();
        let prof = build_ideal_profile(&KinematicLimits::default()).unwrap();
        let tq = torque_profile(&prof, &p);
        let model = GantryModel::new(p, None);
        let cfg = SimConfig {
            dt: 1e-4,
            t_end: Some(0.5),
            ..SimConfig::default()
        };
        let z0 = State::zeros(StateDim::Baseline);
        let a = simulate(&model, &tq, &z0, &cfg).unwrap();
        let b = simulate(&model, &tq, &z0, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn out_of_travel_reports_failure_time() {
        // A huge constant torque slams the carriage into the travel limit.
        let p = GantryParams::default();
        let model = GantryModel::new(p, None);
        let tq = TorqueProfile {
            segments: vec![(0.0, 5.0)],
            total_duration: 10.0,
        };
        let cfg = SimConfig {
            dt: 1e-5,
            t_end: Some(10.0),
            ..SimConfig::default()
        };
        let err = simulate(&model, &tq, &State::zeros(StateDim::Baseline), &cfg).unwrap_err();
        match err {
            Error::OutOfTravel { t, .. } => assert!(t > 0.0),
            other => panic!("expected OutOfTravel, got {other:?}"),
        }
    }

    #[test]
    fn bad_config_rejected() {
        let cfg = SimConfig {
            dt: 0.0,
            ..SimConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = SimConfig {
            output_stride: 0,
            ..SimConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = SimConfig {
            method: Method::Rkf45,
            rel_tol: 0.0,
            ..SimConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
