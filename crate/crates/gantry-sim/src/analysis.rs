//! Tracking-error metrics, the nine-case orthogonal parameter study,
//! main-effects post-processing, and damper parameter search.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{GantryModel, State, StateDim};
use crate::error::{Error, Result};
use crate::integrator::{simulate, SimConfig, Trajectory};
use crate::motion::{reference_state_at, torque_profile, IdealProfile};
use crate::params::{GantryParams, TmdParams};

/// Default settling band for the carriage position error (m); roughly one
/// layer of FFF accuracy.
pub const DEFAULT_SETTLE_BAND: f64 = 50e-6;

/// Scalar tracking-error metrics for one simulated case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseMetrics {
    /// RMS of `x4 - x_ideal` over the full horizon (m), trapezoidal
    /// time weighting.
    pub rms_pos_error: f64,
    /// Largest `|x4 - x_ideal|` over the horizon (m).
    pub max_abs_pos_error: f64,
    /// RMS of `x4_dot - v_ideal` over the full horizon (m/s).
    pub rms_vel_error: f64,
    /// Largest velocity excursion from ideal inside the two velocity
    /// transition regions (m/s): the mid-pass reversal and the final stop.
    pub transition_overshoot: f64,
    /// Time after motion end until the position error stays inside the
    /// settle band (s). Reports the remaining horizon if it never does.
    pub settle_time: f64,
}

/// Compare a trajectory against the ideal motion it was commanded to follow.
pub fn tracking_metrics(traj: &Trajectory, prof: &IdealProfile) -> Result<CaseMetrics> {
    tracking_metrics_with_band(traj, prof, DEFAULT_SETTLE_BAND)
}

/// [`tracking_metrics`] with an explicit settle band (m).
pub fn tracking_metrics_with_band(
    traj: &Trajectory,
    prof: &IdealProfile,
    settle_band: f64,
) -> Result<CaseMetrics> {
    if traj.len() < 2 {
        return Err(Error::HorizonMismatch {
            have: 0.0,
            need: prof.total_duration,
        });
    }
    let horizon = traj.t_end();
    if horizon + 1e-9 < prof.total_duration {
        return Err(Error::HorizonMismatch {
            have: horizon,
            need: prof.total_duration,
        });
    }

    let n = traj.len();
    let mut pos_err = Vec::with_capacity(n);
    let mut vel_err = Vec::with_capacity(n);
    for (t, z) in traj.times.iter().zip(&traj.states) {
        let (x_ideal, v_ideal, _) = reference_state_at(prof, *t);
        pos_err.push(z.x4() - x_ideal);
        vel_err.push(z.v4() - v_ideal);
    }

    let span = horizon - traj.times[0];
    let rms = |err: &[f64]| -> f64 {
        let mut integral = 0.0;
        for i in 1..n {
            let dt = traj.times[i] - traj.times[i - 1];
            integral += 0.5 * dt * (err[i - 1] * err[i - 1] + err[i] * err[i]);
        }
        (integral / span).sqrt()
    };

    let max_abs_pos_error = pos_err.iter().fold(0.0f64, |m, e| m.max(e.abs()));

    // Velocity excursions inside the two transition regions.
    let (rev_start, rev_end) = prof.reversal_window;
    let in_window = |t: f64| -> bool {
        (t >= rev_start && t <= rev_end) || t >= prof.final_decel_start
    };
    let transition_overshoot = traj
        .times
        .iter()
        .zip(&vel_err)
        .filter(|(t, _)| in_window(**t))
        .fold(0.0f64, |m, (_, e)| m.max(e.abs()));

    // Last violation of the settle band after the motion ends.
    let motion_end = prof.total_duration;
    let mut settle_time = 0.0;
    let mut violated_at_last = false;
    for i in 0..n {
        if traj.times[i] >= motion_end && pos_err[i].abs() >= settle_band {
            settle_time = traj.times[i] - motion_end;
            violated_at_last = i == n - 1;
        }
    }
    if violated_at_last {
        settle_time = horizon - motion_end;
    }

    Ok(CaseMetrics {
        rms_pos_error: rms(&pos_err),
        max_abs_pos_error,
        rms_vel_error: rms(&vel_err),
        transition_overshoot,
        settle_time,
    })
}

/// One labelled damper configuration of the study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoeCase {
    pub label: String,
    pub tmd: TmdParams,
}

/// The experiment plan: a list of damper configurations to rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoePlan {
    pub cases: Vec<DoeCase>,
}

impl DoePlan {
    /// The standard L9 orthogonal plan: three levels per factor, every
    /// level appearing three times.
    pub fn standard() -> Self {
        let rows: [(f64, f64, f64); 9] = [
            (0.005, 1.0, 0.1),
            (0.005, 50.0, 0.5),
            (0.005, 100.0, 1.0),
            (0.05, 1.0, 0.5),
            (0.05, 50.0, 1.0),
            (0.05, 100.0, 0.1),
            (0.5, 1.0, 1.0),
            (0.5, 50.0, 0.1),
            (0.5, 100.0, 0.5),
        ];
        DoePlan {
            cases: rows
                .iter()
                .enumerate()
                .map(|(i, &(m7, k7, beta7))| DoeCase {
                    label: format!("Passive case {}", i + 1),
                    tmd: TmdParams::new(m7, k7, beta7),
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cases.is_empty() {
            return Err(Error::IncompletePlan("plan has no cases".into()));
        }
        if self.cases.iter().any(|c| c.label.trim().is_empty()) {
            return Err(Error::IncompletePlan("case labels must be non-empty".into()));
        }
        let mut labels: Vec<&str> = self.cases.iter().map(|c| c.label.as_str()).collect();
        labels.sort_unstable();
        labels.dedup();
        if labels.len() != self.cases.len() {
            return Err(Error::IncompletePlan("case labels must be unique".into()));
        }
        for case in &self.cases {
            case.tmd.validate()?;
        }
        Ok(())
    }
}

/// Outcome of one study case. Failures are reported per case so the rest
/// of the plan still runs.
#[derive(Debug, Clone)]
pub struct DoeCaseResult {
    pub label: String,
    pub tmd: TmdParams,
    pub outcome: std::result::Result<CaseMetrics, String>,
    /// Present when the caller asked to keep trajectories.
    pub trajectory: Option<Trajectory>,
}

/// Simulate every case of the plan under the same torque profile and
/// integrator settings, ranked by `rms_pos_error` ascending (failed cases
/// last, by label). Cases run in parallel; the ranking is deterministic.
pub fn run_doe(
    p: &GantryParams,
    plan: &DoePlan,
    prof: &IdealProfile,
    cfg: &SimConfig,
    keep_trajectories: bool,
) -> Result<Vec<DoeCaseResult>> {
    plan.validate()?;
    let torque = torque_profile(prof, p);

    let mut results: Vec<DoeCaseResult> = plan
        .cases
        .par_iter()
        .map(|case| {
            let model = GantryModel::new(*p, Some(case.tmd));
            let z0 = State::zeros(StateDim::WithTmd);
            let outcome = simulate(&model, &torque, &z0, cfg)
                .and_then(|traj| tracking_metrics(&traj, prof).map(|m| (traj, m)));
            match outcome {
                Ok((traj, metrics)) => DoeCaseResult {
                    label: case.label.clone(),
                    tmd: case.tmd,
                    outcome: Ok(metrics),
                    trajectory: keep_trajectories.then_some(traj),
                },
                Err(e) => DoeCaseResult {
                    label: case.label.clone(),
                    tmd: case.tmd,
                    outcome: Err(e.to_string()),
                    trajectory: None,
                },
            }
        })
        .collect();

    results.sort_by(|a, b| match (&a.outcome, &b.outcome) {
        (Ok(ma), Ok(mb)) => ma
            .rms_pos_error
            .total_cmp(&mb.rms_pos_error)
            .then_with(|| a.label.cmp(&b.label)),
        (Ok(_), Err(_)) => std::cmp::Ordering::Less,
        (Err(_), Ok(_)) => std::cmp::Ordering::Greater,
        (Err(_), Err(_)) => a.label.cmp(&b.label),
    });
    Ok(results)
}

/// Mean response per level of one factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelEffect {
    pub level: f64,
    pub mean_rms_pos_error: f64,
}

/// Per-level means for one damper parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorEffects {
    pub factor: String,
    /// Sorted by level value ascending.
    pub levels: Vec<LevelEffect>,
    /// Level with the smallest mean response.
    pub best_level: f64,
}

/// Main effects of a complete three-level, three-factor plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MainEffects {
    pub m7: FactorEffects,
    pub k7: FactorEffects,
    pub beta7: FactorEffects,
}

fn factor_effects(
    factor: &str,
    values: &[(f64, f64)], // (level value, response)
) -> Result<FactorEffects> {
    let mut levels: Vec<f64> = values.iter().map(|&(v, _)| v).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    if levels.len() != 3 {
        return Err(Error::IncompletePlan(format!(
            "factor {factor} must take exactly 3 levels, found {}",
            levels.len()
        )));
    }
    let mut effects = Vec::with_capacity(3);
    for &level in &levels {
        let group: Vec<f64> = values
            .iter()
            .filter(|&&(v, _)| v == level)
            .map(|&(_, r)| r)
            .collect();
        if group.len() != values.len() / 3 {
            return Err(Error::IncompletePlan(format!(
                "factor {factor} level {level} appears {} times, expected {}",
                group.len(),
                values.len() / 3
            )));
        }
        effects.push(LevelEffect {
            level,
            mean_rms_pos_error: group.iter().sum::<f64>() / group.len() as f64,
        });
    }
    let best_level = effects
        .iter()
        .min_by(|a, b| a.mean_rms_pos_error.total_cmp(&b.mean_rms_pos_error))
        .expect("three levels present")
        .level;
    Ok(FactorEffects {
        factor: factor.to_string(),
        levels: effects,
        best_level,
    })
}

/// Per-factor, per-level means of `rms_pos_error` across a complete
/// balanced plan (9 successful cases, 3 levels per factor).
pub fn main_effects(results: &[DoeCaseResult]) -> Result<MainEffects> {
    let mut rows = Vec::with_capacity(results.len());
    for r in results {
        match &r.outcome {
            Ok(m) => rows.push((r.tmd, m.rms_pos_error)),
            Err(e) => {
                return Err(Error::IncompletePlan(format!(
                    "case '{}' failed: {e}",
                    r.label
                )))
            }
        }
    }
    if rows.len() != 9 {
        return Err(Error::IncompletePlan(format!(
            "expected 9 cases, got {}",
            rows.len()
        )));
    }
    let pick = |f: fn(&TmdParams) -> f64| -> Vec<(f64, f64)> {
        rows.iter().map(|&(tmd, r)| (f(&tmd), r)).collect()
    };
    Ok(MainEffects {
        m7: factor_effects("m7", &pick(|t| t.m7))?,
        k7: factor_effects("k7", &pick(|t| t.k7))?,
        beta7: factor_effects("beta7", &pick(|t| t.beta7))?,
    })
}

/// Inclusive lower/upper bounds for one search axis.
pub type Bounds = (f64, f64);

/// Candidate grid for the coarse search phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GridSpec {
    /// Logarithmically spaced points per axis, endpoints included.
    LogSpaced { points_per_axis: usize },
    /// Explicit level lists per axis.
    Explicit {
        m7: Vec<f64>,
        k7: Vec<f64>,
        beta7: Vec<f64>,
    },
}

/// Damper parameter search settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneOptions {
    pub m7: Bounds,
    pub k7: Bounds,
    pub beta7: Bounds,
    pub grid: GridSpec,
    /// Skip the simplex refinement and return the best grid point.
    pub grid_only: bool,
    /// Budget for refinement objective evaluations.
    pub max_refine_evals: usize,
}

impl Default for TuneOptions {
    /// Bounds spanning the standard study's factor envelope.
    fn default() -> Self {
        TuneOptions {
            m7: (0.005, 0.5),
            k7: (1.0, 100.0),
            beta7: (0.1, 1.0),
            grid: GridSpec::LogSpaced { points_per_axis: 5 },
            grid_only: false,
            max_refine_evals: 120,
        }
    }
}

impl TuneOptions {
    fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [("m7", self.m7), ("k7", self.k7), ("beta7", self.beta7)] {
            if !(lo > 0.0 && hi >= lo) {
                return Err(Error::TuningFailed(format!(
                    "bounds for {name} must be positive and ordered (got [{lo}, {hi}])"
                )));
            }
        }
        if let GridSpec::LogSpaced { points_per_axis } = self.grid {
            if points_per_axis == 0 {
                return Err(Error::TuningFailed("grid needs at least one point".into()));
            }
        }
        Ok(())
    }
}

/// One objective evaluation from the search trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuneEval {
    pub phase: TunePhase,
    pub tmd: TmdParams,
    /// Objective value; `None` when the simulation failed at this point.
    pub rms_pos_error: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TunePhase {
    Grid,
    Refine,
}

/// Search outcome: the best parameters found, their metrics, and the full
/// evaluation trace.
#[derive(Debug, Clone)]
pub struct TuneResult {
    pub best: TmdParams,
    pub metrics: CaseMetrics,
    pub trace: Vec<TuneEval>,
    pub grid_best: TmdParams,
}

fn log_grid(bounds: Bounds, n: usize) -> Vec<f64> {
    let (lo, hi) = bounds;
    if lo == hi || n == 1 {
        return vec![lo];
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| match i {
            0 => lo, // endpoints exact, not round-tripped through ln/exp
            _ if i == n - 1 => hi,
            _ => (llo + (lhi - llo) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

/// Search the damper parameter box for the smallest `rms_pos_error`:
/// a coarse log-spaced grid followed by Nelder-Mead refinement (in log
/// coordinates) from the best grid point. Deterministic for fixed inputs;
/// the returned optimum never ranks worse than the best grid point.
pub fn tune_tmd(
    p: &GantryParams,
    opts: &TuneOptions,
    prof: &IdealProfile,
    cfg: &SimConfig,
) -> Result<TuneResult> {
    opts.validate()?;
    let torque = torque_profile(prof, p);

    let evaluate = |tmd: TmdParams| -> std::result::Result<(CaseMetrics, f64), String> {
        let model = GantryModel::new(*p, Some(tmd));
        let z0 = State::zeros(StateDim::WithTmd);
        simulate(&model, &torque, &z0, cfg)
            .and_then(|traj| tracking_metrics(&traj, prof))
            .map(|m| (m, m.rms_pos_error))
            .map_err(|e| e.to_string())
    };

    let (m7_levels, k7_levels, beta7_levels) = match &opts.grid {
        GridSpec::LogSpaced { points_per_axis } => (
            log_grid(opts.m7, *points_per_axis),
            log_grid(opts.k7, *points_per_axis),
            log_grid(opts.beta7, *points_per_axis),
        ),
        GridSpec::Explicit { m7, k7, beta7 } => (m7.clone(), k7.clone(), beta7.clone()),
    };

    let mut candidates = Vec::new();
    for &m7 in &m7_levels {
        for &k7 in &k7_levels {
            for &beta7 in &beta7_levels {
                candidates.push(TmdParams::new(m7, k7, beta7));
            }
        }
    }

    let grid_outcomes: Vec<std::result::Result<(CaseMetrics, f64), String>> =
        candidates.par_iter().map(|&tmd| evaluate(tmd)).collect();

    let mut trace = Vec::with_capacity(candidates.len());
    let mut best: Option<(TmdParams, CaseMetrics)> = None;
    for (tmd, outcome) in candidates.iter().zip(&grid_outcomes) {
        let rms = outcome.as_ref().ok().map(|&(_, r)| r);
        trace.push(TuneEval {
            phase: TunePhase::Grid,
            tmd: *tmd,
            rms_pos_error: rms,
        });
        if let Ok((metrics, rms)) = outcome {
            let better = best
                .as_ref()
                .is_none_or(|(_, b)| *rms < b.rms_pos_error);
            if better {
                best = Some((*tmd, *metrics));
            }
        }
    }
    let (grid_best, grid_best_metrics) = best.ok_or_else(|| {
        Error::TuningFailed("every grid evaluation failed".into())
    })?;

    if opts.grid_only {
        return Ok(TuneResult {
            best: grid_best,
            metrics: grid_best_metrics,
            trace,
            grid_best,
        });
    }

    // Nelder-Mead in log space over the axes that are actually free.
    let bounds = [opts.m7, opts.k7, opts.beta7];
    let free: Vec<usize> = (0..3).filter(|&i| bounds[i].0 < bounds[i].1).collect();
    if free.is_empty() {
        return Ok(TuneResult {
            best: grid_best,
            metrics: grid_best_metrics,
            trace,
            grid_best,
        });
    }

    let clamp = |x: &[f64; 3]| -> [f64; 3] {
        let mut out = *x;
        for i in 0..3 {
            out[i] = out[i].clamp(bounds[i].0.ln(), bounds[i].1.ln());
        }
        out
    };
    let to_tmd = |x: &[f64; 3]| TmdParams::new(x[0].exp(), x[1].exp(), x[2].exp());

    let mut best_overall = (grid_best, grid_best_metrics);
    let mut evals = 0usize;
    let eval_log = |x: &[f64; 3],
                        trace: &mut Vec<TuneEval>,
                        best_overall: &mut (TmdParams, CaseMetrics),
                        evals: &mut usize|
     -> f64 {
        let tmd = to_tmd(&clamp(x));
        *evals += 1;
        match evaluate(tmd) {
            Ok((metrics, rms)) => {
                trace.push(TuneEval {
                    phase: TunePhase::Refine,
                    tmd,
                    rms_pos_error: Some(rms),
                });
                if rms < best_overall.1.rms_pos_error {
                    *best_overall = (tmd, metrics);
                }
                rms
            }
            Err(_) => {
                trace.push(TuneEval {
                    phase: TunePhase::Refine,
                    tmd,
                    rms_pos_error: None,
                });
                f64::INFINITY
            }
        }
    };

    // Initial simplex: grid best plus a 10%-of-range step along each free axis.
    let x0 = [grid_best.m7.ln(), grid_best.k7.ln(), grid_best.beta7.ln()];
    let mut simplex: Vec<([f64; 3], f64)> = Vec::with_capacity(free.len() + 1);
    simplex.push((clamp(&x0), grid_best_metrics.rms_pos_error));
    for &axis in &free {
        let (lo, hi) = bounds[axis];
        let span = hi.ln() - lo.ln();
        let mut x = x0;
        x[axis] += 0.1 * span;
        if x[axis] > hi.ln() {
            x[axis] = x0[axis] - 0.1 * span;
        }
        let x = clamp(&x);
        let f = eval_log(&x, &mut trace, &mut best_overall, &mut evals);
        simplex.push((x, f));
    }

    // Standard coefficients: reflect 1, expand 2, contract 0.5, shrink 0.5.
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    while evals < opts.max_refine_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let f_best = simplex[0].1;
        let f_worst = simplex[simplex.len() - 1].1;
        if f_worst.is_finite() && (f_worst - f_best) < 1e-4 * f_best.abs().max(1e-300) {
            break;
        }

        let n = simplex.len() - 1;
        let mut centroid = [0.0; 3];
        for (x, _) in &simplex[..n] {
            for i in 0..3 {
                centroid[i] += x[i] / n as f64;
            }
        }
        let worst = simplex[n];

        let mut reflected = [0.0; 3];
        for i in 0..3 {
            reflected[i] = centroid[i] + alpha * (centroid[i] - worst.0[i]);
        }
        let reflected = clamp(&reflected);
        let f_reflected = eval_log(&reflected, &mut trace, &mut best_overall, &mut evals);

        if f_reflected < f_best {
            let mut expanded = [0.0; 3];
            for i in 0..3 {
                expanded[i] = centroid[i] + gamma * (reflected[i] - centroid[i]);
            }
            let expanded = clamp(&expanded);
            let f_expanded = eval_log(&expanded, &mut trace, &mut best_overall, &mut evals);
            simplex[n] = if f_expanded < f_reflected {
                (expanded, f_expanded)
            } else {
                (reflected, f_reflected)
            };
        } else if f_reflected < simplex[n - 1].1 {
            simplex[n] = (reflected, f_reflected);
        } else {
            let mut contracted = [0.0; 3];
            for i in 0..3 {
                contracted[i] = centroid[i] + rho * (worst.0[i] - centroid[i]);
            }
            let contracted = clamp(&contracted);
            let f_contracted = eval_log(&contracted, &mut trace, &mut best_overall, &mut evals);
            if f_contracted < worst.1 {
                simplex[n] = (contracted, f_contracted);
            } else {
                // Shrink everything toward the best vertex.
                let best_x = simplex[0].0;
                for vertex in simplex.iter_mut().skip(1) {
                    let mut x = [0.0; 3];
                    for i in 0..3 {
                        x[i] = best_x[i] + sigma * (vertex.0[i] - best_x[i]);
                    }
                    let x = clamp(&x);
                    let f = eval_log(&x, &mut trace, &mut best_overall, &mut evals);
                    *vertex = (x, f);
                }
            }
        }
    }

    Ok(TuneResult {
        best: best_overall.0,
        metrics: best_overall.1,
        trace,
        grid_best,
    })
}
