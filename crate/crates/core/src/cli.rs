//! Command-line front end: `simulate`, `replay` and `observability`.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::cascade::{self, Evaluation, RunOutput};
use crate::error::{Error, Result};
use crate::io::{self, ConvergenceTimes, RunConfig, RunSummary};
use crate::observability::{window_scan, AttitudeTrace, RateTrace, WindowRow};
use crate::series::Series;
use crate::sim::{self, ConvergenceThresholds, Scenario, SensorSuite, TrajectoryKind};
use crate::so3::{exp_so3, RotationMatrix};

#[derive(Debug, Parser)]
#[command(name = "pitot-cascade", version, about = "Air-velocity, tilt and attitude estimation from IMU, Pitot and magnetometer data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a trajectory, run the observer and score it against the truth.
    Simulate(SimulateArgs),
    /// Run the observer on a recorded CSV log.
    Replay(ReplayArgs),
    /// Windowed observability and excitation diagnostics.
    Observability(ObservabilityArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// level-cruise, banked-turn, yaw-pitch-weave or tumbling.
    #[arg(long, value_parser = parse_kind)]
    traj: Option<TrajectoryKind>,
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    /// Merged sensor log (CSV).
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["log", "traj"]))]
struct ObservabilityArgs {
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long, value_parser = parse_kind)]
    traj: Option<TrajectoryKind>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Window length (s); defaults to the configured value.
    #[arg(long)]
    window: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_kind(s: &str) -> std::result::Result<TrajectoryKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Runs the CLI on `argv` (program name first) and returns the process exit code:
/// 0 on success, 1 on runtime errors, 2 on usage errors.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Replay(args) => replay(args),
        Command::Observability(args) => observability(args),
    };
    match result {
        Ok(summary) => {
            let text = serde_json::to_string_pretty(&summary).unwrap_or_default();
            let _ = writeln!(std::io::stdout(), "{text}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn out_dir(arg: Option<PathBuf>, config: &RunConfig) -> PathBuf {
    arg.or_else(|| config.output.dir.clone()).unwrap_or_else(|| PathBuf::from("out"))
}

fn convergence(eval: &Evaluation) -> ConvergenceTimes {
    let th = ConvergenceThresholds::default();
    ConvergenceTimes {
        att_err_threshold: th.att_err,
        att_err: eval.convergence_time(|m| m.att_err, th.att_err),
        tilt_err_threshold: th.tilt_err,
        tilt_err: eval.convergence_time(|m| m.tilt_err, th.tilt_err),
        air_vel_err_threshold: th.air_vel_err,
        air_vel_err: eval.convergence_time(|m| m.air_vel_err, th.air_vel_err),
    }
}

fn base_summary(command: &str, source: String, run: &RunOutput) -> RunSummary {
    RunSummary {
        command: command.into(),
        source,
        samples: run.outputs.len(),
        pitot_updates: run.pitot_updates,
        mag_updates: run.mag_updates,
        mag_at_start: run.mag_at_start,
        errors: None,
        convergence: None,
        singular_windows: None,
        windows: None,
        files: Vec::new(),
    }
}

fn name(path: &Path) -> String {
    path.display().to_string()
}

fn window_stats(summary: &mut RunSummary, rows: &[WindowRow]) {
    summary.windows = Some(rows.len());
    summary.singular_windows = Some(rows.iter().filter(|r| r.cond_m.is_infinite()).count());
}

fn simulate(args: SimulateArgs) -> Result<RunSummary> {
    let config = load_config(args.config.as_deref())?;
    let observer = config.observer_config()?;
    if (config.rates.imu * observer.imu_period - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "rates.imu ({} Hz) and observer.imu_rate ({} Hz) disagree",
            config.rates.imu, config.observer.imu_rate
        )));
    }
    let spec = config.trajectory.spec(args.traj);
    let scenario = Scenario {
        trajectory: spec.clone(),
        wind: config.wind.clone(),
        noise: config.noise,
        suite: SensorSuite {
            rates: config.rates,
            pitot: observer.pitot.clone(),
            mag_inertial: observer.mag_inertial,
        },
        seed: args.seed.unwrap_or(config.seed),
    };
    let truth = sim::generate_truth_with_gravity(&spec, &scenario.wind, scenario.seed, observer.gravity)?;
    let stream = sim::synthesize_sensors(&truth, &scenario.noise, &scenario.suite, scenario.seed)?;
    let step = (1.0 / (truth.sample_period() * config.rates.imu)).round() as usize;
    let reference = truth.decimate(step)?.reference();
    let run = cascade::run(&stream, &observer, &config.initial_conditions())?;
    let eval = cascade::evaluate(&run.outputs, &reference, 0.5 * observer.imu_period)?;
    let rows = window_scan(&truth.rates(), &truth.attitudes(), &observer.pitot, config.observability.window, observer.gravity)?;

    let dir = out_dir(args.out, &config);
    let files = [
        dir.join("sensors.csv"),
        dir.join("estimates.csv"),
        dir.join("metrics.csv"),
        dir.join("observability.csv"),
        dir.join("summary.json"),
    ];
    io::write_log(&files[0], &stream, Some(&reference))?;
    io::write_estimates(&files[1], &run.outputs)?;
    io::write_metrics(&files[2], &eval.metrics)?;
    io::write_windows(&files[3], &rows)?;

    let mut summary = base_summary("simulate", spec.kind.to_string(), &run);
    summary.errors = Some(eval.summary);
    summary.convergence = Some(convergence(&eval));
    window_stats(&mut summary, &rows);
    summary.files = files.iter().map(|p| name(p)).collect();
    io::write_summary(&files[4], &summary)?;
    Ok(summary)
}

fn replay(args: ReplayArgs) -> Result<RunSummary> {
    let config = load_config(args.config.as_deref())?;
    let observer = config.observer_config()?;
    let log_path = args
        .log
        .or_else(|| config.replay.log.clone())
        .ok_or_else(|| Error::Config("no log given (use --log or replay.log)".into()))?;
    let mut log = io::parse_log(&log_path)?;
    if config.replay.reconstruct_mag_inertial {
        let reference = log
            .reference
            .as_ref()
            .ok_or_else(|| Error::Config("reconstructing the magnetic field needs reference rows".into()))?;
        cascade::reconstruct_inertial_field(&mut log.samples, reference);
    }
    let run = cascade::run(&log.samples, &observer, &config.initial_conditions())?;

    let dir = out_dir(args.out, &config);
    let estimates = dir.join("estimates.csv");
    io::write_estimates(&estimates, &run.outputs)?;
    let mut summary = base_summary("replay", name(&log_path), &run);
    summary.files.push(name(&estimates));
    if let Some(reference) = &log.reference {
        let eval = cascade::evaluate(&run.outputs, reference, 0.5 * observer.imu_period)?;
        let metrics = dir.join("metrics.csv");
        io::write_metrics(&metrics, &eval.metrics)?;
        summary.files.push(name(&metrics));
        summary.errors = Some(eval.summary);
        summary.convergence = Some(convergence(&eval));
    }
    let path = dir.join("summary.json");
    summary.files.push(name(&path));
    io::write_summary(&path, &summary)?;
    Ok(summary)
}

/// Attitude trace obtained by integrating the gyro from the identity. Excitation
/// spectra are invariant to the unknown initial attitude.
fn integrate_gyro(rates: &RateTrace) -> Result<AttitudeTrace> {
    let mut r = RotationMatrix::identity();
    let mut out = Vec::with_capacity(rates.len());
    out.push(r);
    for (w, omega) in rates.times().windows(2).zip(rates.values()) {
        r = r * exp_so3(&(omega * (w[1] - w[0])));
        out.push(r);
    }
    Series::new(rates.times().to_vec(), out)
}

fn observability(args: ObservabilityArgs) -> Result<RunSummary> {
    let config = load_config(args.config.as_deref())?;
    let observer = config.observer_config()?;
    let window = args.window.unwrap_or(config.observability.window);
    let (source, rates, attitudes) = match (&args.log, args.traj) {
        (Some(path), _) => {
            let log = io::parse_log(path)?;
            let rates = log.rates()?;
            let attitudes = match log.reference {
                Some(r) => Series::new(r.times().to_vec(), r.values().iter().map(|s| s.rotation).collect())?,
                None => integrate_gyro(&rates)?,
            };
            (name(path), rates, attitudes)
        }
        (None, kind) => {
            let spec = config.trajectory.spec(kind);
            let truth = sim::generate_truth_with_gravity(&spec, &config.wind, config.seed, observer.gravity)?;
            (spec.kind.to_string(), truth.rates(), truth.attitudes())
        }
    };
    let rows = window_scan(&rates, &attitudes, &observer.pitot, window, observer.gravity)?;
    let dir = out_dir(args.out, &config);
    let table = dir.join("observability.csv");
    io::write_windows(&table, &rows)?;
    let mut summary = RunSummary {
        command: "observability".into(),
        source,
        samples: rates.len(),
        pitot_updates: 0,
        mag_updates: 0,
        mag_at_start: false,
        errors: None,
        convergence: None,
        singular_windows: None,
        windows: None,
        files: vec![name(&table)],
    };
    window_stats(&mut summary, &rows);
    let path = dir.join("summary.json");
    summary.files.push(name(&path));
    io::write_summary(&path, &summary)?;
    Ok(summary)
}
