//! Physical parameters of the gantry model and the position-dependent
//! belt-stiffness relations.
//!
//! The moving belt sections soften as they lengthen: each section behaves
//! as `Csp·b / length + Fpl / L0`, so the carriage position `x4` enters the
//! dynamics through the stiffnesses `k4` and `k5`. Section 3 (pulley to
//! pulley) has fixed length and therefore constant stiffness `k6`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Masses, stiffnesses, damping coefficients and belt geometry of the
/// gantry. All values in SI units (kg, N/m, N·s/m, m, N).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GantryParams {
    /// Printer mount mass (kg): the bench or desk the machine sits on.
    pub m1: f64,
    /// Frame mass (kg).
    pub m2: f64,
    /// Overall gantry mass (kg).
    pub m3: f64,
    /// Pulley 4 mass (kg), driven side.
    pub m4: f64,
    /// Pulley 5 mass (kg).
    pub m5: f64,
    /// Extruder carriage mass (kg).
    pub m6: f64,
    /// Ground/mount stiffness (N/m).
    pub k1: f64,
    /// Frame/mount stiffness (N/m).
    pub k2: f64,
    /// Gantry/frame stiffness (N/m); depends on gantry height, taken constant.
    pub k3: f64,
    /// Ground/mount damping (N·s/m).
    pub beta1: f64,
    /// Frame/mount damping (N·s/m).
    pub beta2: f64,
    /// Gantry/frame damping (N·s/m).
    pub beta3: f64,
    /// Belt section 1 damping (N·s/m), carriage to pulley 4.
    pub beta4: f64,
    /// Belt section 2 damping (N·s/m), carriage to pulley 5.
    pub beta5: f64,
    /// Belt section 3 damping (N·s/m), fixed pulley-to-pulley span.
    pub beta6: f64,
    /// Pulley radius (m); both pulleys share it.
    pub r: f64,
    /// Carriage-to-pulley-4 belt length at x4 = 0 (m).
    pub l1: f64,
    /// Carriage-to-pulley-5 belt length at x4 = 0 (m).
    pub l2: f64,
    /// Fixed belt span between pulley contact points (m).
    pub l: f64,
    /// Total belt length (m).
    pub l0: f64,
    /// Belt width (m).
    pub b: f64,
    /// Characteristic belt stiffness (N/m).
    pub csp: f64,
    /// Belt preload (N).
    pub fpl: f64,
}

impl Default for GantryParams {
    /// Parameters measured on a desktop Cartesian FFF machine (GT2 belts,
    /// 8 mm pulleys). `l2` is chosen so the 180 mm print travel sits
    /// symmetrically between the pulleys: `l2 = l1 + travel`.
    fn default() -> Self {
        GantryParams {
            m1: 500.0,
            m2: 6.201,
            m3: 0.721,
            m4: 0.017,
            m5: 0.019,
            m6: 0.611,
            k1: 1.0e6,
            k2: 1.0e5,
            k3: 6410.0,
            beta1: 10_000.0,
            beta2: 1_000.0,
            beta3: 1.0,
            beta4: 5.0,
            beta5: 5.0,
            beta6: 5.0,
            r: 0.008,
            l1: 0.080,
            l2: 0.260,
            l: 0.350,
            l0: 0.750,
            b: 0.006,
            csp: 1.74e6,
            fpl: 45.0,
        }
    }
}

/// Passive tuned-mass-damper attached to the extruder carriage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TmdParams {
    /// Damper mass (kg).
    pub m7: f64,
    /// Damper spring stiffness (N/m).
    pub k7: f64,
    /// Damper damping coefficient (N·s/m).
    pub beta7: f64,
}

impl TmdParams {
    pub fn new(m7: f64, k7: f64, beta7: f64) -> Self {
        TmdParams { m7, k7, beta7 }
    }

    pub fn validate(&self) -> Result<()> {
        let mut v = Vec::new();
        if !(self.m7 > 0.0) {
            v.push(format!("damper mass m7 must be positive (got {})", self.m7));
        }
        if !(self.k7 > 0.0) {
            v.push(format!(
                "damper stiffness k7 must be positive (got {})",
                self.k7
            ));
        }
        if !(self.beta7 >= 0.0) {
            v.push(format!(
                "damper damping beta7 must be non-negative (got {})",
                self.beta7
            ));
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(v.join("\n")))
        }
    }
}

/// Belt stiffnesses evaluated at one carriage position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeltState {
    /// Section 1 stiffness (N/m), length `l1 + x4`.
    pub k4: f64,
    /// Section 2 stiffness (N/m), length `l2 - x4`.
    pub k5: f64,
    /// Section 3 stiffness (N/m), constant.
    pub k6: f64,
    /// Carriage position the moving sections were evaluated at (m).
    pub x4: f64,
}

/// Outcome of parameter validation; collects every violated invariant
/// instead of stopping at the first.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidParams(self.violations.join("\n")))
        }
    }
}

/// Check every model invariant for a parameter set and an intended
/// one-way carriage travel (m). Returns a report rather than failing fast.
pub fn validate_params(p: &GantryParams, travel: f64) -> ValidationReport {
    let mut violations = Vec::new();
    let mut positive = |name: &str, value: f64| {
        if !(value > 0.0) {
            violations.push(format!("{name} must be positive (got {value})"));
        }
    };
    positive("m1", p.m1);
    positive("m2", p.m2);
    positive("m3", p.m3);
    positive("m4", p.m4);
    positive("m5", p.m5);
    positive("m6", p.m6);
    positive("k1", p.k1);
    positive("k2", p.k2);
    positive("k3", p.k3);
    positive("r", p.r);
    positive("l1", p.l1);
    positive("l2", p.l2);
    positive("l", p.l);
    positive("l0", p.l0);
    positive("b", p.b);
    positive("csp", p.csp);

    for (name, value) in [
        ("beta1", p.beta1),
        ("beta2", p.beta2),
        ("beta3", p.beta3),
        ("beta4", p.beta4),
        ("beta5", p.beta5),
        ("beta6", p.beta6),
        ("fpl", p.fpl),
    ] {
        if !(value >= 0.0) {
            violations.push(format!("{name} must be non-negative (got {value})"));
        }
    }

    if !(travel > 0.0) {
        violations.push(format!("travel must be positive (got {travel})"));
    }
    // Moving-section lengths must stay positive over the whole travel,
    // otherwise k4/k5 hit their 1/length singularities.
    if p.l2 - travel <= 0.0 {
        violations.push(format!(
            "belt section 2 reaches zero length: l2 = {} m with travel {} m",
            p.l2, travel
        ));
    }
    if p.l1 + travel >= p.l0 {
        violations.push(format!(
            "moving belt section exceeds total belt length: l1 + travel = {} m, l0 = {} m",
            p.l1 + travel,
            p.l0
        ));
    }
    ValidationReport { violations }
}

/// Stiffness of the fixed belt span (N/m): `Csp·b/L + Fpl/L0`.
pub fn belt_stiffness_fixed(p: &GantryParams) -> f64 {
    p.csp * p.b / p.l + p.fpl / p.l0
}

/// Stiffnesses of the two moving belt sections at carriage position `x4`:
/// `k4 = Csp·b/(L1+x4) + Fpl/L0`, `k5 = Csp·b/(L2−x4) + Fpl/L0`.
///
/// Fails when either section length is non-positive.
pub fn belt_stiffness_moving(p: &GantryParams, x4: f64) -> Result<(f64, f64)> {
    let len4 = p.l1 + x4;
    let len5 = p.l2 - x4;
    if !(len4 > 0.0) {
        return Err(Error::BeltSection { section: 1, x4 });
    }
    if !(len5 > 0.0) {
        return Err(Error::BeltSection { section: 2, x4 });
    }
    let preload = p.fpl / p.l0;
    Ok((p.csp * p.b / len4 + preload, p.csp * p.b / len5 + preload))
}

/// All three belt stiffnesses at `x4`.
pub fn belt_state(p: &GantryParams, x4: f64) -> Result<BeltState> {
    let (k4, k5) = belt_stiffness_moving(p, x4)?;
    Ok(BeltState {
        k4,
        k5,
        k6: belt_stiffness_fixed(p),
        x4,
    })
}

/// Solid-disc pulley inertia `m·R²/2` (kg·m²). The rotational equations
/// carry the factor `2/(m·R)` throughout, which is exactly this model.
pub fn pulley_inertia(mass: f64, radius: f64) -> f64 {
    0.5 * mass * radius * radius
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const TRAVEL: f64 = 0.180;

    #[test]
    fn reference_params_pass() {
        let report = validate_params(&GantryParams::default(), TRAVEL);
        assert!(report.is_valid(), "{:?}", report.violations);
    }

    #[test]
    fn zero_mass_fails() {
        let p = GantryParams {
            m6: 0.0,
            ..GantryParams::default()
        };
        let report = validate_params(&p, TRAVEL);
        assert!(!report.is_valid());
        assert!(report.violations.iter().any(|v| v.contains("m6")));
    }

    #[test]
    fn belt_section_singularity_fails() {
        let p = GantryParams {
            l2: 0.180,
            ..GantryParams::default()
        };
        let report = validate_params(&p, 0.180);
        assert!(!report.is_valid());
        assert!(report.violations.iter().any(|v| v.contains("section 2")));
    }

    #[test]
    fn fixed_stiffness_reference_value() {
        // Csp·b/L + Fpl/L0 = 1.74e6·0.006/0.35 + 45/0.75
        let k6 = belt_stiffness_fixed(&GantryParams::default());
        assert_relative_eq!(k6, 29888.571428571428, max_relative = 1e-12);
    }

    #[test]
    fn fixed_stiffness_no_preload_unit_ratio() {
        let p = GantryParams {
            fpl: 0.0,
            l: 0.006, // equal to belt width: ratio b/L = 1
            ..GantryParams::default()
        };
        assert_relative_eq!(belt_stiffness_fixed(&p), p.csp, max_relative = 1e-15);
    }

    #[test]
    fn fixed_stiffness_halves_when_span_doubles() {
        let p = GantryParams {
            fpl: 0.0,
            ..GantryParams::default()
        };
        let doubled = GantryParams { l: 2.0 * p.l, ..p };
        assert_relative_eq!(
            belt_stiffness_fixed(&doubled),
            0.5 * belt_stiffness_fixed(&p),
            max_relative = 1e-15
        );
    }

    #[test]
    fn moving_stiffness_reference_values() {
        let p = GantryParams::default();
        let (k4, k5) = belt_stiffness_moving(&p, 0.0).unwrap();
        // 1.74e6·0.006/0.08 + 60 and 1.74e6·0.006/0.26 + 60
        assert_relative_eq!(k4, 130_560.0, max_relative = 1e-12);
        assert_relative_eq!(k5, 40_213.846153846156, max_relative = 1e-12);
    }

    #[test]
    fn moving_stiffness_symmetric_point() {
        let p = GantryParams::default();
        let x_sym = (p.l2 - p.l1) / 2.0;
        let (k4, k5) = belt_stiffness_moving(&p, x_sym).unwrap();
        assert_relative_eq!(k4, k5, max_relative = 1e-14);
    }

    #[test]
    fn moving_stiffness_domain_error() {
        let p = GantryParams::default();
        assert!(matches!(
            belt_stiffness_moving(&p, -p.l1),
            Err(Error::BeltSection { section: 1, .. })
        ));
        assert!(matches!(
            belt_stiffness_moving(&p, p.l2),
            Err(Error::BeltSection { section: 2, .. })
        ));
    }

    #[test]
    fn pulley_inertia_reference_values() {
        assert_relative_eq!(pulley_inertia(0.017, 0.008), 5.44e-7, max_relative = 1e-12);
        assert_relative_eq!(pulley_inertia(0.019, 0.008), 6.08e-7, max_relative = 1e-12);
        assert_relative_eq!(pulley_inertia(2.0, 1.0), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn stiffness_sum_minimized_at_symmetric_point() {
        let p = GantryParams::default();
        let x_sym = (p.l2 - p.l1) / 2.0;
        let sum = |x: f64| {
            let (k4, k5) = belt_stiffness_moving(&p, x).unwrap();
            k4 + k5
        };
        let s_min = sum(x_sym);
        let mut prev_left = s_min;
        let mut prev_right = s_min;
        for i in 1..=40 {
            let dx = i as f64 * TRAVEL / 80.0;
            let left = sum(x_sym - dx);
            let right = sum(x_sym + dx);
            assert!(left > prev_left, "sum must grow toward the lower limit");
            assert!(right > prev_right, "sum must grow toward the upper limit");
            prev_left = left;
            prev_right = right;
        }
    }

    #[test]
    fn fixed_equals_moving_formula_with_fixed_span() {
        // k6 is the same relation evaluated with the constant span length.
        let p = GantryParams::default();
        let shifted = GantryParams {
            l1: p.l,
            ..GantryParams::default()
        };
        let (k4, _) = belt_stiffness_moving(&shifted, 0.0).unwrap();
        assert_relative_eq!(belt_stiffness_fixed(&p), k4, max_relative = 1e-14);
    }

    proptest::proptest! {
        #[test]
        fn stiffness_positive_inside_travel(x in 0.0f64..0.18) {
            let p = GantryParams::default();
            let (k4, k5) = belt_stiffness_moving(&p, x).unwrap();
            proptest::prop_assert!(k4 > 0.0 && k5 > 0.0);
        }
    }
}
