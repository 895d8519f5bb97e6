//! Command-line interface: simulate a print pass, run the nine-case damper
//! study, search damper parameters, or compare two trajectory files.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gantry_sim::analysis::{GridSpec, TunePhase};
use gantry_sim::config::Config;
use gantry_sim::output::{
    self, fmt9, CompareMetrics, MetricsDocument, MetricsRow, RunMetadata,
};
use gantry_sim::{
    build_ideal_profile, main_effects, run_doe, simulate, torque_profile, tracking_metrics,
    tune_tmd, Error, GantryModel, IdealProfile, Result, State, TuneOptions,
};

#[derive(Parser)]
#[command(
    name = "gantry-sim",
    about = "Vibration simulation of a belt-driven FFF printer gantry with a tuned mass damper",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Integrator step size override (s).
    #[arg(long, value_name = "SECONDS")]
    dt: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation; writes the trajectory and its tracking metrics.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Simulate the bare machine without the carriage damper.
        #[arg(long)]
        no_tmd: bool,
    },
    /// Run the damper parameter study and rank the cases.
    Doe {
        #[command(flatten)]
        common: CommonArgs,
        /// Skip writing per-case trajectory files.
        #[arg(long)]
        no_trajectories: bool,
    },
    /// Search damper parameters for the smallest RMS position error.
    Tune {
        #[command(flatten)]
        common: CommonArgs,
        /// Bounds for the damper mass, as LO:HI (kg).
        #[arg(long, value_name = "LO:HI", value_parser = parse_bounds)]
        m7: Option<(f64, f64)>,
        /// Bounds for the damper stiffness, as LO:HI (N/m).
        #[arg(long, value_name = "LO:HI", value_parser = parse_bounds)]
        k7: Option<(f64, f64)>,
        /// Bounds for the damper damping, as LO:HI (N·s/m).
        #[arg(long, value_name = "LO:HI", value_parser = parse_bounds)]
        beta7: Option<(f64, f64)>,
        /// Coarse grid points per axis.
        #[arg(long, default_value_t = 5)]
        grid: usize,
        /// Return the best grid point without simplex refinement.
        #[arg(long)]
        grid_only: bool,
    },
    /// Tracking-error metrics between two trajectory files.
    Compare {
        /// First trajectory CSV.
        a: PathBuf,
        /// Second trajectory CSV.
        b: PathBuf,
    },
}

fn parse_bounds(s: &str) -> std::result::Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("expected LO:HI, got '{s}'"))?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("bad bound: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("bad bound: {e}"))?;
    Ok((lo, hi))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load_config(common: &CommonArgs) -> Result<Config> {
    let mut config = match &common.config {
        Some(path) => Config::from_path(path)?,
        None => Config::default(),
    };
    if let Some(dt) = common.dt {
        config.sim.dt = dt;
        config.sim.validate()?;
    }
    if let Some(out) = &common.out {
        config.output_dir = out.clone();
    }
    Ok(config)
}

fn ensure_out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn metadata(config: &Config, digest: &str) -> RunMetadata {
    RunMetadata {
        method: config.sim.method.as_str().to_string(),
        dt: config.sim.dt,
        output_stride: config.sim.output_stride,
        junction_jerk_mm_s: config.limits.jerk,
        settle_band_m: gantry_sim::analysis::DEFAULT_SETTLE_BAND,
        params_digest: digest.to_string(),
    }
}

fn file_stem(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                '_'
            }
        })
        .collect()
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { common, no_tmd } => cmd_simulate(&common, no_tmd),
        Command::Doe {
            common,
            no_trajectories,
        } => cmd_doe(&common, !no_trajectories),
        Command::Tune {
            common,
            m7,
            k7,
            beta7,
            grid,
            grid_only,
        } => cmd_tune(&common, m7, k7, beta7, grid, grid_only),
        Command::Compare { a, b } => cmd_compare(&a, &b),
    }
}

fn build_profile(config: &Config) -> Result<IdealProfile> {
    build_ideal_profile(&config.limits)
}

fn cmd_simulate(common: &CommonArgs, no_tmd: bool) -> Result<()> {
    let mut config = load_config(common)?;
    if no_tmd {
        config.tmd = None;
    }
    let prof = build_profile(&config)?;
    let torque = torque_profile(&prof, &config.gantry);
    let model = GantryModel::new(config.gantry, config.tmd);
    let z0 = State::zeros(model.state_dim());
    let traj = simulate(&model, &torque, &z0, &config.sim)?;
    let metrics = tracking_metrics(&traj, &prof)?;

    ensure_out_dir(&config.output_dir)?;
    let traj_path = config.output_dir.join("trajectory.csv");
    output::write_trajectory(&traj, &prof, &traj_path)?;

    let label = if config.tmd.is_some() { "with_tmd" } else { "no_tmd" };
    let rows = vec![MetricsRow::new(label, config.tmd, &metrics)];
    output::write_metrics_csv(&rows, &config.output_dir.join("metrics.csv"))?;
    output::write_json(
        &MetricsDocument {
            metadata: metadata(&config, &traj.meta.params_digest),
            results: rows,
        },
        &config.output_dir.join("metrics.json"),
    )?;

    println!(
        "simulated {} states over {} s ({} samples) -> {}",
        traj.state_dim(),
        fmt9(traj.t_end()),
        traj.len(),
        traj_path.display()
    );
    println!(
        "rms position error {} m, max {} m, settle {} s",
        fmt9(metrics.rms_pos_error),
        fmt9(metrics.max_abs_pos_error),
        fmt9(metrics.settle_time)
    );
    Ok(())
}

fn cmd_doe(common: &CommonArgs, keep_trajectories: bool) -> Result<()> {
    let config = load_config(common)?;
    let prof = build_profile(&config)?;
    let results = run_doe(
        &config.gantry,
        &config.doe,
        &prof,
        &config.sim,
        keep_trajectories,
    )?;
    ensure_out_dir(&config.output_dir)?;

    let mut rows = Vec::with_capacity(results.len());
    let mut digest = String::new();
    let mut failures = Vec::new();
    for r in &results {
        match &r.outcome {
            Ok(metrics) => rows.push(MetricsRow::new(&r.label, Some(r.tmd), metrics)),
            Err(e) => {
                failures.push(format!("{}: {e}", r.label));
                let mut row = MetricsRow::new(
                    &r.label,
                    Some(r.tmd),
                    &gantry_sim::CaseMetrics {
                        rms_pos_error: f64::NAN,
                        max_abs_pos_error: f64::NAN,
                        rms_vel_error: f64::NAN,
                        transition_overshoot: f64::NAN,
                        settle_time: f64::NAN,
                    },
                );
                row.error = Some(e.clone());
                rows.push(row);
            }
        }
        if let Some(traj) = &r.trajectory {
            digest = traj.meta.params_digest.clone();
            let path = config
                .output_dir
                .join(format!("{}.csv", file_stem(&r.label)));
            output::write_trajectory(traj, &prof, &path)?;
        }
    }

    output::write_metrics_csv(&rows, &config.output_dir.join("doe_metrics.csv"))?;
    output::write_json(
        &MetricsDocument {
            metadata: metadata(&config, &digest),
            results: rows,
        },
        &config.output_dir.join("doe_metrics.json"),
    )?;

    match main_effects(&results) {
        Ok(effects) => {
            output::write_main_effects_csv(
                &effects,
                &config.output_dir.join("doe_main_effects.csv"),
            )?;
            output::write_json(&effects, &config.output_dir.join("doe_main_effects.json"))?;
        }
        Err(e) => eprintln!("note: main effects not computed: {e}"),
    }

    println!("ranked {} cases -> {}", results.len(), config.output_dir.display());
    for (rank, r) in results.iter().enumerate() {
        match &r.outcome {
            Ok(m) => println!(
                "{:>2}. {:<16} m7={:<7} k7={:<7} beta7={:<5} rms={} m",
                rank + 1,
                r.label,
                r.tmd.m7,
                r.tmd.k7,
                r.tmd.beta7,
                fmt9(m.rms_pos_error)
            ),
            Err(e) => println!("{:>2}. {:<16} FAILED: {e}", rank + 1, r.label),
        }
    }

    if failures.is_empty() {
        Ok(())
    } else {
        Err(Error::CaseFailures(format!(
            "{} case(s) failed: {}",
            failures.len(),
            failures.join("; ")
        )))
    }
}

fn cmd_tune(
    common: &CommonArgs,
    m7: Option<(f64, f64)>,
    k7: Option<(f64, f64)>,
    beta7: Option<(f64, f64)>,
    grid: usize,
    grid_only: bool,
) -> Result<()> {
    let config = load_config(common)?;
    let prof = build_profile(&config)?;
    let defaults = TuneOptions::default();
    let opts = TuneOptions {
        m7: m7.unwrap_or(defaults.m7),
        k7: k7.unwrap_or(defaults.k7),
        beta7: beta7.unwrap_or(defaults.beta7),
        grid: GridSpec::LogSpaced {
            points_per_axis: grid,
        },
        grid_only,
        ..defaults
    };
    let result = tune_tmd(&config.gantry, &opts, &prof, &config.sim)?;
    ensure_out_dir(&config.output_dir)?;

    // Search trace: every objective evaluation in order.
    let trace_path = config.output_dir.join("tune_trace.csv");
    {
        use std::io::Write;
        let file =
            std::fs::File::create(&trace_path).map_err(|e| Error::io(&trace_path, e))?;
        let mut w = std::io::BufWriter::new(file);
        let io_err = |e: std::io::Error| Error::io(&trace_path, e);
        writeln!(w, "phase,m7_kg,k7_N_per_m,beta7_Ns_per_m,rms_pos_error_m")
            .map_err(io_err)?;
        for eval in &result.trace {
            let phase = match eval.phase {
                TunePhase::Grid => "grid",
                TunePhase::Refine => "refine",
            };
            writeln!(
                w,
                "{phase},{},{},{},{}",
                fmt9(eval.tmd.m7),
                fmt9(eval.tmd.k7),
                fmt9(eval.tmd.beta7),
                eval.rms_pos_error.map(fmt9).unwrap_or_default()
            )
            .map_err(io_err)?;
        }
        w.flush().map_err(io_err)?;
    }

    let mut best_row = MetricsRow::new("optimum", Some(result.best), &result.metrics);
    best_row.error = None;
    output::write_json(
        &MetricsDocument {
            metadata: metadata(&config, ""),
            results: vec![best_row],
        },
        &config.output_dir.join("tune_result.json"),
    )?;

    println!(
        "optimum: m7 = {} kg, k7 = {} N/m, beta7 = {} N·s/m",
        result.best.m7, result.best.k7, result.best.beta7
    );
    println!(
        "rms position error {} m over {} evaluations -> {}",
        fmt9(result.metrics.rms_pos_error),
        result.trace.len(),
        config.output_dir.display()
    );
    Ok(())
}

fn cmd_compare(a: &Path, b: &Path) -> Result<()> {
    let ta = output::read_trajectory(a)?;
    let tb = output::read_trajectory(b)?;
    let m: CompareMetrics = output::compare_trajectories(&ta, &tb)?;
    println!("{}", serde_json::to_string_pretty(&m).expect("serializable"));
    Ok(())
}
