//! Equations of motion and state-space assembly for the gantry.
//!
//! Two equivalent routes to the state derivative exist on purpose:
//!
//! * [`GantryModel::deriv`] evaluates the equations of motion directly,
//!   term by term;
//! * [`assemble_matrices`] builds the `A`/`B`/`C` state-space matrices at a
//!   given carriage position.
//!
//! The two are cross-checked in the tests; they must agree to rounding.
//! The system is nonlinear through the belt stiffnesses `k4(x4)`, `k5(x4)`,
//! so `A` is only ever valid at the position it was evaluated for, and the
//! derivative path re-evaluates the stiffnesses at every call.
//!
//! State ordering (baseline 12 states, 14 with the damper):
//! `x1, ẋ1, x2, ẋ2, x3, ẋ3, x4, ẋ4, θ4, θ̇4, θ5, θ̇5 [, x5, ẋ5]`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::params::{belt_state, pulley_inertia, BeltState, GantryParams, TmdParams};

/// Largest state dimension (with the carriage damper attached).
pub const MAX_STATES: usize = 14;

/// Dimension of the state vector: 12 baseline, 14 with the damper.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateDim {
    Baseline,
    WithTmd,
}

impl StateDim {
    pub fn len(self) -> usize {
        match self {
            StateDim::Baseline => 12,
            StateDim::WithTmd => 14,
        }
    }

    pub fn from_len(len: usize) -> Result<Self> {
        match len {
            12 => Ok(StateDim::Baseline),
            14 => Ok(StateDim::WithTmd),
            other => Err(Error::DimensionMismatch {
                expected: 12,
                got: other,
            }),
        }
    }
}

/// Fixed-capacity state vector; always 12 or 14 entries long.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    buf: [f64; MAX_STATES],
    dim: StateDim,
}

impl State {
    pub fn zeros(dim: StateDim) -> Self {
        State {
            buf: [0.0; MAX_STATES],
            dim,
        }
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        let dim = StateDim::from_len(values.len())?;
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteState);
        }
        let mut buf = [0.0; MAX_STATES];
        buf[..values.len()].copy_from_slice(values);
        Ok(State { buf, dim })
    }

    pub fn dim(&self) -> StateDim {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.dim.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.buf[..self.dim.len()]
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.buf[..self.dim.len()]
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|v| v.is_finite())
    }

    /// Carriage position x4 (m).
    pub fn x4(&self) -> f64 {
        self.buf[6]
    }

    /// Carriage velocity ẋ4 (m/s).
    pub fn v4(&self) -> f64 {
        self.buf[7]
    }

    /// `self + scale * other`, entry-wise.
    pub(crate) fn add_scaled(&self, scale: f64, other: &State) -> State {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for i in 0..self.dim.len() {
            out.buf[i] += scale * other.buf[i];
        }
        out
    }
}

impl std::ops::Index<usize> for State {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.as_slice()[i]
    }
}

impl std::ops::IndexMut<usize> for State {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.as_mut_slice()[i]
    }
}

/// How the moving belt stiffnesses are evaluated during a simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BeltMode {
    /// Re-evaluate `k4`/`k5` from the instantaneous carriage position at
    /// every derivative call (including integrator substages).
    Moving,
    /// Hold the stiffness at a fixed position. Used by conservation checks;
    /// the system becomes linear time-invariant.
    Frozen { x4: f64 },
}

/// Gantry plus optional carriage damper, ready to produce derivatives.
#[derive(Debug, Clone, Copy)]
pub struct GantryModel {
    pub params: GantryParams,
    pub tmd: Option<TmdParams>,
    pub belt_mode: BeltMode,
}

impl GantryModel {
    pub fn new(params: GantryParams, tmd: Option<TmdParams>) -> Self {
        GantryModel {
            params,
            tmd,
            belt_mode: BeltMode::Moving,
        }
    }

    pub fn frozen_at(params: GantryParams, tmd: Option<TmdParams>, x4: f64) -> Self {
        GantryModel {
            params,
            tmd,
            belt_mode: BeltMode::Frozen { x4 },
        }
    }

    pub fn state_dim(&self) -> StateDim {
        if self.tmd.is_some() {
            StateDim::WithTmd
        } else {
            StateDim::Baseline
        }
    }

    fn belt_at(&self, x4: f64) -> Result<BeltState> {
        match self.belt_mode {
            BeltMode::Moving => belt_state(&self.params, x4),
            BeltMode::Frozen { x4: frozen } => belt_state(&self.params, frozen),
        }
    }

    /// State derivative `ż` under input torque `torque` (N·m), with the
    /// equations of motion written out directly.
    pub fn deriv(&self, z: &State, torque: f64) -> Result<State> {
        if z.dim() != self.state_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.state_dim().len(),
                got: z.len(),
            });
        }
        let p = &self.params;
        let BeltState { k4, k5, k6, .. } = self.belt_at(z.x4())?;

        let (x1, v1, x2, v2) = (z[0], z[1], z[2], z[3]);
        let (x3, v3, x4, v4) = (z[4], z[5], z[6], z[7]);
        let (th4, w4, th5, w5) = (z[8], z[9], z[10], z[11]);

        let mut dz = State::zeros(z.dim());
        dz[0] = v1;
        dz[1] = -(p.k1 + p.k2) / p.m1 * x1 - (p.beta1 + p.beta2) / p.m1 * v1
            + p.k2 / p.m1 * x2
            + p.beta2 / p.m1 * v2;
        dz[2] = v2;
        dz[3] = p.k2 / p.m2 * x1 + p.beta2 / p.m2 * v1
            - (p.k2 + p.k3) / p.m2 * x2
            - (p.beta2 + p.beta3) / p.m2 * v2
            + p.k3 / p.m2 * x3
            + p.beta3 / p.m2 * v3;
        dz[4] = v3;
        dz[5] = p.k3 / p.m3 * x2 + p.beta3 / p.m3 * v2
            - (p.k3 + k4 + k5) / p.m3 * x3
            - (p.beta3 + p.beta4 + p.beta5) / p.m3 * v3
            + (k4 + k5) / p.m3 * x4
            + (p.beta4 + p.beta5) / p.m3 * v4
            + k4 * p.r / p.m3 * th4
            + p.beta4 * p.r / p.m3 * w4
            + k5 * p.r / p.m3 * th5
            + p.beta5 * p.r / p.m3 * w5;
        dz[6] = v4;
        dz[8] = w4;
        dz[9] = 2.0 * k4 / (p.m4 * p.r) * x3 + 2.0 * p.beta4 / (p.m4 * p.r) * v3
            - 2.0 * k4 / (p.m4 * p.r) * x4
            - 2.0 * p.beta4 / (p.m4 * p.r) * v4
            - 2.0 * (k4 + k6) / p.m4 * th4
            - 2.0 * (p.beta4 + p.beta6) / p.m4 * w4
            + 2.0 * k6 / p.m4 * th5
            + 2.0 * p.beta6 / p.m4 * w5
            + 2.0 * torque / (p.m4 * p.r * p.r);
        dz[10] = w5;
        dz[11] = 2.0 * k5 / (p.m5 * p.r) * x3 + 2.0 * p.beta5 / (p.m5 * p.r) * v3
            - 2.0 * k5 / (p.m5 * p.r) * x4
            - 2.0 * p.beta5 / (p.m5 * p.r) * v4
            + 2.0 * k6 / p.m5 * th4
            + 2.0 * p.beta6 / p.m5 * w4
            - 2.0 * (k5 + k6) / p.m5 * th5
            - 2.0 * (p.beta5 + p.beta6) / p.m5 * w5;

        match self.tmd {
            None => {
                dz[7] = (k4 + k5) / p.m6 * x3 + (p.beta4 + p.beta5) / p.m6 * v3
                    - (k4 + k5) / p.m6 * x4
                    - (p.beta4 + p.beta5) / p.m6 * v4
                    - k4 * p.r / p.m6 * th4
                    - p.beta4 * p.r / p.m6 * w4
                    - k5 * p.r / p.m6 * th5
                    - p.beta5 * p.r / p.m6 * w5;
            }
            Some(tmd) => {
                let (x5, v5) = (z[12], z[13]);
                dz[7] = (k4 + k5) / p.m6 * x3 + (p.beta4 + p.beta5) / p.m6 * v3
                    - (k4 + k5 + tmd.k7) / p.m6 * x4
                    - (p.beta4 + p.beta5 + tmd.beta7) / p.m6 * v4
                    - k4 * p.r / p.m6 * th4
                    - p.beta4 * p.r / p.m6 * w4
                    - k5 * p.r / p.m6 * th5
                    - p.beta5 * p.r / p.m6 * w5
                    + tmd.k7 / p.m6 * x5
                    + tmd.beta7 / p.m6 * v5;
                dz[12] = v5;
                dz[13] = tmd.k7 / tmd.m7 * x4 + tmd.beta7 / tmd.m7 * v4
                    - tmd.k7 / tmd.m7 * x5
                    - tmd.beta7 / tmd.m7 * v5;
            }
        }
        Ok(dz)
    }
}

/// State-space matrices evaluated at one carriage position.
#[derive(Debug, Clone)]
pub struct SystemMatrices {
    /// System matrix; 12×12 baseline, 14×14 with the damper.
    pub a: DMatrix<f64>,
    /// Input column mapping the pulley torque into the state derivative.
    pub b: DVector<f64>,
    /// Output row summing carriage position and velocity.
    pub c: DVector<f64>,
    /// Carriage position the moving belt stiffnesses were evaluated at (m).
    pub evaluated_at_x4: f64,
}

impl SystemMatrices {
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }
}

/// Assemble `A`, `B`, `C` at carriage position `x4`, independently of the
/// direct derivative path.
pub fn assemble_matrices(
    p: &GantryParams,
    x4: f64,
    tmd: Option<&TmdParams>,
) -> Result<SystemMatrices> {
    let BeltState { k4, k5, k6, .. } = belt_state(p, x4)?;
    let n = if tmd.is_some() { 14 } else { 12 };
    let mut a = DMatrix::zeros(n, n);

    // Selector rows: position derivatives are the adjacent velocities.
    for row in (0..n).step_by(2) {
        a[(row, row + 1)] = 1.0;
    }

    // Mount.
    a[(1, 0)] = -(p.k1 + p.k2) / p.m1;
    a[(1, 1)] = -(p.beta1 + p.beta2) / p.m1;
    a[(1, 2)] = p.k2 / p.m1;
    a[(1, 3)] = p.beta2 / p.m1;

    // Frame.
    a[(3, 0)] = p.k2 / p.m2;
    a[(3, 1)] = p.beta2 / p.m2;
    a[(3, 2)] = -(p.k2 + p.k3) / p.m2;
    a[(3, 3)] = -(p.beta2 + p.beta3) / p.m2;
    a[(3, 4)] = p.k3 / p.m2;
    a[(3, 5)] = p.beta3 / p.m2;

    // Gantry.
    a[(5, 2)] = p.k3 / p.m3;
    a[(5, 3)] = p.beta3 / p.m3;
    a[(5, 4)] = -(p.k3 + k4 + k5) / p.m3;
    a[(5, 5)] = -(p.beta3 + p.beta4 + p.beta5) / p.m3;
    a[(5, 6)] = (k4 + k5) / p.m3;
    a[(5, 7)] = (p.beta4 + p.beta5) / p.m3;
    a[(5, 8)] = k4 * p.r / p.m3;
    a[(5, 9)] = p.beta4 * p.r / p.m3;
    a[(5, 10)] = k5 * p.r / p.m3;
    a[(5, 11)] = p.beta5 * p.r / p.m3;

    // Carriage.
    a[(7, 4)] = (k4 + k5) / p.m6;
    a[(7, 5)] = (p.beta4 + p.beta5) / p.m6;
    a[(7, 8)] = -k4 * p.r / p.m6;
    a[(7, 9)] = -p.beta4 * p.r / p.m6;
    a[(7, 10)] = -k5 * p.r / p.m6;
    a[(7, 11)] = -p.beta5 * p.r / p.m6;
    match tmd {
        None => {
            a[(7, 6)] = -(k4 + k5) / p.m6;
            a[(7, 7)] = -(p.beta4 + p.beta5) / p.m6;
        }
        Some(tmd) => {
            a[(7, 6)] = -(k4 + k5 + tmd.k7) / p.m6;
            a[(7, 7)] = -(p.beta4 + p.beta5 + tmd.beta7) / p.m6;
            a[(7, 12)] = tmd.k7 / p.m6;
            a[(7, 13)] = tmd.beta7 / p.m6;
        }
    }

    // Pulley 4 (torque input lands here).
    a[(9, 4)] = 2.0 * k4 / (p.m4 * p.r);
    a[(9, 5)] = 2.0 * p.beta4 / (p.m4 * p.r);
    a[(9, 6)] = -2.0 * k4 / (p.m4 * p.r);
    a[(9, 7)] = -2.0 * p.beta4 / (p.m4 * p.r);
    a[(9, 8)] = -2.0 * (k4 + k6) / p.m4;
    a[(9, 9)] = -2.0 * (p.beta4 + p.beta6) / p.m4;
    a[(9, 10)] = 2.0 * k6 / p.m4;
    a[(9, 11)] = 2.0 * p.beta6 / p.m4;

    // Pulley 5.
    a[(11, 4)] = 2.0 * k5 / (p.m5 * p.r);
    a[(11, 5)] = 2.0 * p.beta5 / (p.m5 * p.r);
    a[(11, 6)] = -2.0 * k5 / (p.m5 * p.r);
    a[(11, 7)] = -2.0 * p.beta5 / (p.m5 * p.r);
    a[(11, 8)] = 2.0 * k6 / p.m5;
    a[(11, 9)] = 2.0 * p.beta6 / p.m5;
    a[(11, 10)] = -2.0 * (k5 + k6) / p.m5;
    a[(11, 11)] = -2.0 * (p.beta5 + p.beta6) / p.m5;

    // Damper.
    if let Some(tmd) = tmd {
        a[(13, 6)] = tmd.k7 / tmd.m7;
        a[(13, 7)] = tmd.beta7 / tmd.m7;
        a[(13, 12)] = -tmd.k7 / tmd.m7;
        a[(13, 13)] = -tmd.beta7 / tmd.m7;
    }

    let mut b = DVector::zeros(n);
    b[9] = 2.0 / (p.m4 * p.r * p.r);

    let mut c = DVector::zeros(n);
    c[6] = 1.0;
    c[7] = 1.0;

    Ok(SystemMatrices {
        a,
        b,
        c,
        evaluated_at_x4: x4,
    })
}

/// The scalar output `C·z`, i.e. carriage position plus carriage velocity.
/// Mixed units as given; trajectories expose the full state separately.
pub fn observe(m: &SystemMatrices, z: &State) -> Result<f64> {
    if m.dim() != z.len() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            got: z.len(),
        });
    }
    Ok(m.c.iter().zip(z.as_slice()).map(|(c, z)| c * z).sum())
}

/// Derivative of the three-mass support chain alone (mount, frame, gantry),
/// with the gantry-internal motion reduced to an external force `d` (N).
/// State ordering: `x1, ẋ1, x2, ẋ2, x3, ẋ3`.
pub fn deriv_three_mass(x: &[f64; 6], p: &GantryParams, d: f64) -> [f64; 6] {
    let (x1, v1, x2, v2, x3, v3) = (x[0], x[1], x[2], x[3], x[4], x[5]);
    [
        v1,
        -(p.k1 + p.k2) / p.m1 * x1 + p.k2 / p.m1 * x2,
        v2,
        p.k2 / p.m2 * x1 - (p.k2 + p.k3) / p.m2 * x2 + p.k3 / p.m2 * x3,
        v3,
        p.k3 / p.m3 * x2 - p.k3 / p.m3 * x3 + d / p.m3,
    ]
}

/// Total mechanical energy (J) with belt stiffnesses frozen at `freeze_x4`.
///
/// Kinetic terms for every mass and pulley, elastic terms for every spring
/// and belt section. Belt elongations: section 1 stretches by
/// `x4 − x3 + R·θ4`, section 2 by `x4 − x3 + R·θ5`, section 3 by
/// `R·(θ4 − θ5)`. The negative gradient of this function reproduces the
/// conservative force terms of the equations of motion (checked in tests),
/// so it serves as the conservation oracle for the integrator.
pub fn mechanical_energy(
    p: &GantryParams,
    tmd: Option<&TmdParams>,
    z: &State,
    freeze_x4: f64,
) -> Result<f64> {
    let expected = if tmd.is_some() { 14 } else { 12 };
    if z.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: z.len(),
        });
    }
    let BeltState { k4, k5, k6, .. } = belt_state(p, freeze_x4)?;
    let j4 = pulley_inertia(p.m4, p.r);
    let j5 = pulley_inertia(p.m5, p.r);

    let (x1, v1, x2, v2) = (z[0], z[1], z[2], z[3]);
    let (x3, v3, x4, v4) = (z[4], z[5], z[6], z[7]);
    let (th4, w4, th5, w5) = (z[8], z[9], z[10], z[11]);

    let e4 = x4 - x3 + p.r * th4;
    let e5 = x4 - x3 + p.r * th5;
    let e6 = p.r * (th4 - th5);

    let kinetic = 0.5
        * (p.m1 * v1 * v1
            + p.m2 * v2 * v2
            + p.m3 * v3 * v3
            + p.m6 * v4 * v4
            + j4 * w4 * w4
            + j5 * w5 * w5);
    let elastic = 0.5
        * (p.k1 * x1 * x1
            + p.k2 * (x2 - x1) * (x2 - x1)
            + p.k3 * (x3 - x2) * (x3 - x2)
            + k4 * e4 * e4
            + k5 * e5 * e5
            + k6 * e6 * e6);

    let mut energy = kinetic + elastic;
    if let Some(tmd) = tmd {
        let (x5, v5) = (z[12], z[13]);
        energy += 0.5 * (tmd.m7 * v5 * v5 + tmd.k7 * (x5 - x4) * (x5 - x4));
    }
    Ok(energy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::belt_stiffness_moving;
    use approx::assert_relative_eq;

    fn reference() -> GantryParams {
        GantryParams::default()
    }

    fn case9() -> TmdParams {
        TmdParams::new(0.5, 100.0, 0.5)
    }

    /// Deterministic pseudo-random doubles in [-1, 1).
    struct Lcg(u64);
    impl Lcg {
        fn next(&mut self) -> f64 {
            self.0 = self
                .0
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((self.0 >> 11) as f64) / ((1u64 << 53) as f64) * 2.0 - 1.0
        }
    }

    fn random_state(rng: &mut Lcg, dim: StateDim, scale: f64) -> State {
        let mut z = State::zeros(dim);
        for i in 0..dim.len() {
            z[i] = scale * rng.next();
        }
        // keep the carriage inside the validated range
        z[6] = 0.09 + 0.08 * rng.next();
        z
    }

    #[test]
    fn zero_state_is_equilibrium() {
        let model = GantryModel::new(reference(), None);
        let dz = model.deriv(&State::zeros(StateDim::Baseline), 0.0).unwrap();
        assert!(dz.as_slice().iter().all(|&v| v == 0.0));

        let model = GantryModel::new(reference(), Some(case9()));
        let dz = model.deriv(&State::zeros(StateDim::WithTmd), 0.0).unwrap();
        assert!(dz.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_column_pulley_readoff() {
        // Only θ4 displaced: accelerations follow single matrix columns.
        let p = reference();
        let model = GantryModel::new(p, None);
        let mut z = State::zeros(StateDim::Baseline);
        z[8] = 1.0;
        let dz = model.deriv(&z, 0.0).unwrap();
        let (k4, _) = belt_stiffness_moving(&p, 0.0).unwrap();
        let k6 = crate::params::belt_stiffness_fixed(&p);
        assert_relative_eq!(dz[9], -2.0 * (k4 + k6) / p.m4, max_relative = 1e-15);
        assert_relative_eq!(dz[11], 2.0 * k6 / p.m5, max_relative = 1e-15);
        assert_relative_eq!(dz[5], k4 * p.r / p.m3, max_relative = 1e-15);
        assert_relative_eq!(dz[7], -k4 * p.r / p.m6, max_relative = 1e-15);
    }

    #[test]
    fn state_dimension_must_match_model() {
        let model = GantryModel::new(reference(), Some(case9()));
        let err = model.deriv(&State::zeros(StateDim::Baseline), 0.0);
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn three_mass_equilibrium_and_columns() {
        let p = reference();
        assert_eq!(deriv_three_mass(&[0.0; 6], &p, 0.0), [0.0; 6]);

        let dx = deriv_three_mass(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0], &p, 0.0);
        assert_relative_eq!(dx[1], -(p.k1 + p.k2) / p.m1, max_relative = 1e-15);
        assert_relative_eq!(dx[3], p.k2 / p.m2, max_relative = 1e-15);
        assert_eq!(dx[5], 0.0);
    }

    #[test]
    fn three_mass_matches_matrix_oracle() {
        // Independent 6x6 assembly of the support-chain equations.
        let p = reference();
        let mut a = DMatrix::<f64>::zeros(6, 6);
        a[(0, 1)] = 1.0;
        a[(2, 3)] = 1.0;
        a[(4, 5)] = 1.0;
        a[(1, 0)] = -(p.k1 + p.k2) / p.m1;
        a[(1, 2)] = p.k2 / p.m1;
        a[(3, 0)] = p.k2 / p.m2;
        a[(3, 2)] = -(p.k2 + p.k3) / p.m2;
        a[(3, 4)] = p.k3 / p.m2;
        a[(5, 2)] = p.k3 / p.m3;
        a[(5, 4)] = -p.k3 / p.m3;

        let mut rng = Lcg(7);
        for _ in 0..50 {
            let x: [f64; 6] = std::array::from_fn(|_| rng.next());
            let direct = deriv_three_mass(&x, &p, 0.0);
            let via_matrix = &a * DVector::from_row_slice(&x);
            for i in 0..6 {
                assert_relative_eq!(direct[i], via_matrix[i], max_relative = 1e-12, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn matrix_entries_reference_values() {
        let p = reference();
        let m = assemble_matrices(&p, 0.0, None).unwrap();
        assert_eq!(m.dim(), 12);
        assert_relative_eq!(m.a[(1, 0)], -2200.0, max_relative = 1e-12);

        // Single nonzero input entry at the driven pulley's rate row.
        let nonzero: Vec<usize> = (0..12).filter(|&i| m.b[i] != 0.0).collect();
        assert_eq!(nonzero, vec![9]);
        assert_relative_eq!(m.b[9], 1.8382352941176470e6, max_relative = 1e-12);

        let with_tmd = assemble_matrices(&p, 0.0, Some(&case9())).unwrap();
        assert_eq!(with_tmd.dim(), 14);
        assert_relative_eq!(with_tmd.a[(13, 12)], -200.0, max_relative = 1e-12);
    }

    #[test]
    fn selector_rows_across_travel() {
        let p = reference();
        for i in 0..=20 {
            let x4 = 0.18 * i as f64 / 20.0;
            let m = assemble_matrices(&p, x4, Some(&case9())).unwrap();
            for row in (0..14).step_by(2) {
                for col in 0..14 {
                    let expected = if col == row + 1 { 1.0 } else { 0.0 };
                    assert_eq!(m.a[(row, col)], expected, "row {row} col {col}");
                }
            }
        }
    }

    #[test]
    fn belt_coupling_is_action_reaction() {
        let p = reference();
        for &x4 in &[0.0, 0.05, 0.18] {
            let m = assemble_matrices(&p, x4, None).unwrap();
            // Gantry/carriage belt force on x4 balances the reaction.
            assert_relative_eq!(
                p.m3 * m.a[(5, 6)],
                -p.m6 * m.a[(7, 6)],
                max_relative = 1e-12
            );
            assert_relative_eq!(
                p.m3 * m.a[(5, 7)],
                -p.m6 * m.a[(7, 7)],
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn damper_coupling_is_action_reaction() {
        let p = reference();
        let tmd = case9();
        let m = assemble_matrices(&p, 0.04, Some(&tmd)).unwrap();
        assert_relative_eq!(
            p.m6 * m.a[(7, 12)],
            -tmd.m7 * m.a[(13, 12)],
            max_relative = 1e-12
        );
        assert_relative_eq!(
            p.m6 * m.a[(7, 13)],
            -tmd.m7 * m.a[(13, 13)],
            max_relative = 1e-12
        );
    }

    #[test]
    fn deriv_matches_matrix_route() {
        let p = reference();
        let mut rng = Lcg(42);
        for (tmd, dim) in [
            (None, StateDim::Baseline),
            (Some(case9()), StateDim::WithTmd),
        ] {
            for _ in 0..200 {
                let z = random_state(&mut rng, dim, 0.5);
                let torque = 0.01 * rng.next();
                let model = GantryModel::new(p, tmd);
                let direct = model.deriv(&z, torque).unwrap();
                let m = assemble_matrices(&p, z.x4(), tmd.as_ref()).unwrap();
                let zv = DVector::from_row_slice(z.as_slice());
                let via_matrix = &m.a * zv + &m.b * torque;
                for i in 0..dim.len() {
                    let scale: f64 = (0..dim.len())
                        .map(|j| (m.a[(i, j)] * z[j]).abs())
                        .sum::<f64>()
                        + (m.b[i] * torque).abs();
                    let tol = 1e-13 * scale.max(1e-30);
                    assert!(
                        (direct[i] - via_matrix[i]).abs() <= tol,
                        "component {i}: {} vs {}",
                        direct[i],
                        via_matrix[i]
                    );
                }
            }
        }
    }

    #[test]
    fn observe_sums_carriage_position_and_velocity() {
        let p = reference();
        let m = assemble_matrices(&p, 0.0, None).unwrap();
        let mut z = State::zeros(StateDim::Baseline);
        z[6] = 0.1;
        z[7] = 0.05;
        assert_relative_eq!(observe(&m, &z).unwrap(), 0.15, max_relative = 1e-15);

        assert_eq!(observe(&m, &State::zeros(StateDim::Baseline)).unwrap(), 0.0);

        z[6] = 1.0;
        z[7] = -1.0;
        assert_eq!(observe(&m, &z).unwrap(), 0.0);

        let err = observe(&m, &State::zeros(StateDim::WithTmd));
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn energy_reference_values() {
        let p = reference();
        assert_eq!(
            mechanical_energy(&p, None, &State::zeros(StateDim::Baseline), 0.0).unwrap(),
            0.0
        );
        let mut z = State::zeros(StateDim::Baseline);
        z[7] = 1.0;
        assert_relative_eq!(
            mechanical_energy(&p, None, &z, 0.0).unwrap(),
            0.3055,
            max_relative = 1e-12
        );
    }

    #[test]
    fn energy_gradient_reproduces_conservative_forces() {
        // With damping removed, the acceleration rows must equal
        // -(1/m_i) ∂E/∂q_i. Checked by central finite differences.
        let mut p = reference();
        p.beta1 = 0.0;
        p.beta2 = 0.0;
        p.beta3 = 0.0;
        p.beta4 = 0.0;
        p.beta5 = 0.0;
        p.beta6 = 0.0;
        let tmd = TmdParams::new(0.5, 100.0, 0.0);
        let freeze = 0.07;
        let model = GantryModel::frozen_at(p, Some(tmd), freeze);

        let mut rng = Lcg(3);
        let z = random_state(&mut rng, StateDim::WithTmd, 1e-3);
        let dz = model.deriv(&z, 0.0).unwrap();

        let j4 = pulley_inertia(p.m4, p.r);
        let j5 = pulley_inertia(p.m5, p.r);
        // (position index, rate row, generalized inertia)
        let coords = [
            (0usize, 1usize, p.m1),
            (2, 3, p.m2),
            (4, 5, p.m3),
            (6, 7, p.m6),
            (8, 9, j4),
            (10, 11, j5),
            (12, 13, tmd.m7),
        ];
        let h = 1e-6;
        for (pos, rate_row, inertia) in coords {
            let mut plus = z;
            plus[pos] += h;
            let mut minus = z;
            minus[pos] -= h;
            let e_plus = mechanical_energy(&p, Some(&tmd), &plus, freeze).unwrap();
            let e_minus = mechanical_energy(&p, Some(&tmd), &minus, freeze).unwrap();
            let grad = (e_plus - e_minus) / (2.0 * h);
            let force_from_deriv = inertia * dz[rate_row];
            assert_relative_eq!(
                -grad,
                force_from_deriv,
                max_relative = 1e-5,
                epsilon = 1e-8
            );
        }
    }

    proptest::proptest! {
        #[test]
        fn selector_rows_hold_for_any_position(x4 in 0.0f64..0.18) {
            let m = assemble_matrices(&reference(), x4, None).unwrap();
            for row in (0..12).step_by(2) {
                for col in 0..12 {
                    let expected = if col == row + 1 { 1.0 } else { 0.0 };
                    proptest::prop_assert_eq!(m.a[(row, col)], expected);
                }
            }
        }
    }
}
