//! Results serialization: trajectory CSV files, metrics tables (CSV and
//! JSON), and trajectory-file comparison.
//!
//! All floating-point values are written with 9 significant digits in
//! exponent form, so files are byte-reproducible across identical runs and
//! round-trip through `f64` parsing.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::analysis::{CaseMetrics, MainEffects};
use crate::dynamics::State;
use crate::error::{Error, Result};
use crate::integrator::Trajectory;
use crate::motion::{reference_state_at, IdealProfile};
use crate::params::TmdParams;

/// 9 significant digits, exponent form.
pub fn fmt9(v: f64) -> String {
    format!("{v:.8e}")
}

const BASE_COLUMNS: &str = "t,x1,v1,x2,v2,x3,v3,x4,v4,th4,w4,th5,w5";
const TAIL_COLUMNS: &str = "torque,x_ideal,v_ideal";

fn trajectory_header(dim: usize) -> String {
    match dim {
        12 => format!("{BASE_COLUMNS},{TAIL_COLUMNS}"),
        14 => format!("{BASE_COLUMNS},x5,v5,{TAIL_COLUMNS}"),
        other => unreachable!("state dimension {other}"),
    }
}

/// Write a simulated trajectory with the ideal reference columns attached.
pub fn write_trajectory(traj: &Trajectory, prof: &IdealProfile, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e: std::io::Error| Error::io(path, e);

    writeln!(w, "{}", trajectory_header(traj.state_dim())).map_err(io_err)?;
    let mut line = String::with_capacity(32 * (traj.state_dim() + 4));
    for ((t, z), torque) in traj.times.iter().zip(&traj.states).zip(&traj.torques) {
        let (x_ideal, v_ideal, _) = reference_state_at(prof, *t);
        line.clear();
        line.push_str(&fmt9(*t));
        for v in z.as_slice() {
            line.push(',');
            line.push_str(&fmt9(*v));
        }
        line.push(',');
        line.push_str(&fmt9(*torque));
        line.push(',');
        line.push_str(&fmt9(x_ideal));
        line.push(',');
        line.push_str(&fmt9(v_ideal));
        writeln!(w, "{line}").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// A trajectory file read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryData {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub torques: Vec<f64>,
    pub x_ideal: Vec<f64>,
    pub v_ideal: Vec<f64>,
}

/// Parse a trajectory CSV produced by [`write_trajectory`].
pub fn read_trajectory(path: &Path) -> Result<TrajectoryData> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let bad = |detail: String| Error::TrajectoryFormat {
        path: path.to_path_buf(),
        detail,
    };

    let header = lines
        .next()
        .ok_or_else(|| bad("empty file".into()))?
        .map_err(|e| Error::io(path, e))?;
    let dim = if header == trajectory_header(12) {
        12
    } else if header == trajectory_header(14) {
        14
    } else {
        return Err(bad(format!("unrecognized header: {header}")));
    };
    let columns = 1 + dim + 3;

    let mut data = TrajectoryData {
        times: Vec::new(),
        states: Vec::new(),
        torques: Vec::new(),
        x_ideal: Vec::new(),
        v_ideal: Vec::new(),
    };
    for (lineno, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns {
            return Err(bad(format!(
                "line {}: expected {} fields, found {}",
                lineno + 2,
                columns,
                fields.len()
            )));
        }
        let mut values = Vec::with_capacity(columns);
        for f in &fields {
            values.push(f.parse::<f64>().map_err(|e| {
                bad(format!("line {}: bad number '{f}': {e}", lineno + 2))
            })?);
        }
        data.times.push(values[0]);
        data.states.push(State::from_slice(&values[1..=dim])?);
        data.torques.push(values[dim + 1]);
        data.x_ideal.push(values[dim + 2]);
        data.v_ideal.push(values[dim + 3]);
    }
    if data.times.is_empty() {
        return Err(bad("no data rows".into()));
    }
    Ok(data)
}

/// Carriage-tracking differences between two trajectory files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompareMetrics {
    pub rms_pos_diff: f64,
    pub max_abs_pos_diff: f64,
    pub rms_vel_diff: f64,
    pub max_abs_vel_diff: f64,
}

/// Compare the carriage columns of two trajectories sampled on the same
/// time grid.
pub fn compare_trajectories(a: &TrajectoryData, b: &TrajectoryData) -> Result<CompareMetrics> {
    if a.times.len() != b.times.len() {
        return Err(Error::Incomparable(format!(
            "row counts differ: {} vs {}",
            a.times.len(),
            b.times.len()
        )));
    }
    for (ta, tb) in a.times.iter().zip(&b.times) {
        if (ta - tb).abs() > 1e-9 {
            return Err(Error::Incomparable(format!(
                "time grids differ at t = {ta} vs {tb}"
            )));
        }
    }
    let n = a.times.len();
    let span = a.times[n - 1] - a.times[0];
    let mut pos = Vec::with_capacity(n);
    let mut vel = Vec::with_capacity(n);
    for (za, zb) in a.states.iter().zip(&b.states) {
        pos.push(za.x4() - zb.x4());
        vel.push(za.v4() - zb.v4());
    }
    let rms = |err: &[f64]| -> f64 {
        if span <= 0.0 {
            return err.iter().map(|e| e * e).sum::<f64>().sqrt() / (n as f64).sqrt();
        }
        let mut integral = 0.0;
        for i in 1..n {
            let dt = a.times[i] - a.times[i - 1];
            integral += 0.5 * dt * (err[i - 1] * err[i - 1] + err[i] * err[i]);
        }
        (integral / span).sqrt()
    };
    let max_abs = |err: &[f64]| err.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    Ok(CompareMetrics {
        rms_pos_diff: rms(&pos),
        max_abs_pos_diff: max_abs(&pos),
        rms_vel_diff: rms(&vel),
        max_abs_vel_diff: max_abs(&vel),
    })
}

/// One row of a metrics table.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsRow {
    pub label: String,
    /// Damper parameters, absent for bare-machine runs.
    pub m7: Option<f64>,
    pub k7: Option<f64>,
    pub beta7: Option<f64>,
    pub rms_pos_error: f64,
    pub max_abs_pos_error: f64,
    pub rms_vel_error: f64,
    pub transition_overshoot: f64,
    pub settle_time: f64,
    /// Error message for cases that failed to simulate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl MetricsRow {
    pub fn new(label: &str, tmd: Option<TmdParams>, metrics: &CaseMetrics) -> Self {
        MetricsRow {
            label: label.to_string(),
            m7: tmd.map(|t| t.m7),
            k7: tmd.map(|t| t.k7),
            beta7: tmd.map(|t| t.beta7),
            rms_pos_error: metrics.rms_pos_error,
            max_abs_pos_error: metrics.max_abs_pos_error,
            rms_vel_error: metrics.rms_vel_error,
            transition_overshoot: metrics.transition_overshoot,
            settle_time: metrics.settle_time,
            error: None,
        }
    }
}

/// Fixed metrics-table schema; units are spelled out in the header.
pub const METRICS_HEADER: &str = "label,m7_kg,k7_N_per_m,beta7_Ns_per_m,\
rms_pos_error_m,max_abs_pos_error_m,rms_vel_error_m_per_s,\
transition_overshoot_m_per_s,settle_time_s";

fn csv_field(label: &str) -> String {
    if label.contains(',') || label.contains('"') {
        format!("\"{}\"", label.replace('"', "\"\""))
    } else {
        label.to_string()
    }
}

/// Write the metrics table as CSV, one row per case, ranked order preserved.
pub fn write_metrics_csv(rows: &[MetricsRow], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e: std::io::Error| Error::io(path, e);
    writeln!(w, "{METRICS_HEADER}").map_err(io_err)?;
    for row in rows {
        let opt = |v: Option<f64>| v.map(fmt9).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            csv_field(&row.label),
            opt(row.m7),
            opt(row.k7),
            opt(row.beta7),
            fmt9(row.rms_pos_error),
            fmt9(row.max_abs_pos_error),
            fmt9(row.rms_vel_error),
            fmt9(row.transition_overshoot),
            fmt9(row.settle_time),
        )
        .map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Run metadata recorded next to every metrics document.
#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub method: String,
    pub dt: f64,
    pub output_stride: usize,
    /// Junction velocity allowance used for the ideal profile (mm/s).
    pub junction_jerk_mm_s: f64,
    /// Settle band applied to the settle-time metric (m).
    pub settle_band_m: f64,
    pub params_digest: String,
}

/// Machine-readable metrics document.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsDocument {
    pub metadata: RunMetadata,
    pub results: Vec<MetricsRow>,
}

/// Serialize any document as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Write per-factor level means as CSV.
pub fn write_main_effects_csv(effects: &MainEffects, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e: std::io::Error| Error::io(path, e);
    writeln!(w, "factor,level,mean_rms_pos_error_m,is_best").map_err(io_err)?;
    for factor in [&effects.m7, &effects.k7, &effects.beta7] {
        for level in &factor.levels {
            writeln!(
                w,
                "{},{},{},{}",
                factor.factor,
                fmt9(level.level),
                fmt9(level.mean_rms_pos_error),
                level.level == factor.best_level
            )
            .map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{GantryModel, StateDim};
    use crate::integrator::{simulate, SimConfig};
    use crate::motion::{build_ideal_profile, torque_profile};
    use crate::params::GantryParams;
    use crate::KinematicLimits;

    fn short_run() -> (Trajectory, IdealProfile) {
        let p = GantryParams::default();
        let prof = build_ideal_profile(&KinematicLimits::default()).unwrap();
        let tq = torque_profile(&prof, &p);
        let model = GantryModel::new(p, None);
        let cfg = SimConfig {
            dt: 2e-4,
            t_end: Some(0.05),
            output_stride: 1,
            ..SimConfig::default()
        };
        let traj = simulate(&model, &tq, &State::zeros(StateDim::Baseline), &cfg).unwrap();
        (traj, prof)
    }

    #[test]
    fn header_matches_dimension() {
        assert!(trajectory_header(12).starts_with("t,x1,v1"));
        assert!(trajectory_header(12).ends_with("th5,w5,torque,x_ideal,v_ideal"));
        assert!(trajectory_header(14).contains(",x5,v5,torque"));
    }

    #[test]
    fn round_trip_preserves_nine_digits() {
        let (traj, prof) = short_run();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traj.csv");
        write_trajectory(&traj, &prof, &path).unwrap();
        let back = read_trajectory(&path).unwrap();
        assert_eq!(back.times.len(), traj.len());
        for (row, (za, zb)) in traj.states.iter().zip(&back.states).enumerate() {
            for i in 0..za.len() {
                let (a, b) = (za[i], zb[i]);
                let tol = 1e-8 * a.abs().max(1e-300);
                assert!(
                    (a - b).abs() <= tol,
                    "row {row} col {i}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn zero_rows_write_zeros() {
        let prof = build_ideal_profile(&KinematicLimits::default()).unwrap();
        let traj = Trajectory {
            times: vec![0.0, 1.0, 2.0],
            states: vec![State::zeros(StateDim::Baseline); 3],
            torques: vec![0.0; 3],
            meta: crate::integrator::TrajectoryMeta {
                method: "rk4".into(),
                dt: 1.0,
                params_digest: String::new(),
            },
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("zeros.csv");
        write_trajectory(&traj, &prof, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4); // header + 3 rows
        assert!(lines[1].starts_with("0.00000000e0,0.00000000e0"));
    }

    #[test]
    fn comparing_a_file_with_itself_is_zero() {
        let (traj, prof) = short_run();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traj.csv");
        write_trajectory(&traj, &prof, &path).unwrap();
        let a = read_trajectory(&path).unwrap();
        let b = read_trajectory(&path).unwrap();
        let m = compare_trajectories(&a, &b).unwrap();
        assert_eq!(m.rms_pos_diff, 0.0);
        assert_eq!(m.max_abs_pos_diff, 0.0);
        assert_eq!(m.rms_vel_diff, 0.0);
        assert_eq!(m.max_abs_vel_diff, 0.0);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let (traj, prof) = short_run();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traj.csv");
        write_trajectory(&traj, &prof, &path).unwrap();
        let a = read_trajectory(&path).unwrap();
        let mut b = a.clone();
        b.times.pop();
        b.states.pop();
        assert!(matches!(
            compare_trajectories(&a, &b),
            Err(Error::Incomparable(_))
        ));
    }

    #[test]
    fn bad_files_are_reported_with_detail() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "nonsense header\n1,2,3\n").unwrap();
        match read_trajectory(&path) {
            Err(Error::TrajectoryFormat { detail, .. }) => {
                assert!(detail.contains("header"))
            }
            other => panic!("expected format error, got {other:?}"),
        }
    }
}
