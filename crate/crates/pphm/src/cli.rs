//! Argument parsing and dispatch for the `pphm` binary.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use pphm_core::simgen::{
    generate, AccelParams, Dataset, DriftParams, InvalidParams, LocationProfile, PanelParams,
    RecoveryParams, SeriesLabels, SimKind, SimSpec,
};

use crate::commands::{self, PredictorOptions};
use crate::config::{
    parse_band_flag, BandSection, FileConfig, FitOptions, MonitorOptions, DEFAULT_ACTIVITY_WINDOW,
    DEFAULT_ALPHA, DEFAULT_MIN_ABS,
};
use crate::error::{CliError, Result};
use crate::io;
use crate::report::SimulateSummary;

#[derive(Debug, Parser)]
#[command(
    name = "pphm",
    version,
    about = "Biomarker monitoring: recovery fits, threshold alerts, predictor ranking, activity load"
)]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a seeded synthetic dataset.
    Simulate {
        #[command(subcommand)]
        kind: SimulateKind,
    },
    /// Fit the recovery curve to one heart-rate series.
    FitRecovery(FitArgs),
    /// Replay biomarker series against threshold bands and report alerts.
    Monitor(MonitorArgs),
    /// Rank factors by standardized regression coefficient.
    Predictors(PredictorArgs),
    /// Window accelerometer data, rank body locations by load, cluster windows.
    Activity(ActivityArgs),
}

#[derive(Debug, Args)]
pub struct SimCommon {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; `-` or absent writes to standard output.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum SimulateKind {
    /// Noisy recovery curve a + (d - a)·exp(-θt).
    #[command(allow_negative_numbers = true)]
    Recovery {
        #[arg(long, default_value_t = 60.0)]
        a: f64,
        #[arg(long, default_value_t = 180.0)]
        d: f64,
        #[arg(long, default_value_t = 0.05)]
        theta: f64,
        #[arg(long, default_value_t = 120)]
        n: usize,
        #[arg(long, default_value_t = 2.0)]
        sigma: f64,
        #[arg(long, default_value_t = 1.0)]
        dt: f64,
        #[arg(long, default_value = "sim")]
        subject: String,
        #[arg(long, default_value = "heart_rate")]
        channel: String,
        #[arg(long, default_value = "bpm")]
        unit: String,
        #[command(flatten)]
        common: SimCommon,
    },
    /// Noisy straight line start + slope·t.
    #[command(allow_negative_numbers = true)]
    Drift {
        #[arg(long, default_value_t = 100.0)]
        start: f64,
        #[arg(long, default_value_t = 0.5)]
        slope: f64,
        #[arg(long, default_value_t = 61)]
        n: usize,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, default_value_t = 1.0)]
        dt: f64,
        #[arg(long, default_value = "sim")]
        subject: String,
        #[arg(long, default_value = "glucose")]
        channel: String,
        #[arg(long, default_value = "mg/dL")]
        unit: String,
        #[command(flatten)]
        common: SimCommon,
    },
    /// Factor table with a target planted on the standardized factors.
    #[command(allow_negative_numbers = true)]
    Panel {
        /// Planted coefficients, comma separated; one factor per entry.
        #[arg(long, default_value = "2,0,-1.5,0,0,0", allow_hyphen_values = true)]
        coef: String,
        #[arg(long, default_value_t = 200)]
        m: usize,
        #[arg(long, default_value_t = 0.5)]
        sigma: f64,
        /// Name of the target column.
        #[arg(long, default_value = "L")]
        target: String,
        #[command(flatten)]
        common: SimCommon,
    },
    /// Accelerometer stream, one sensor per body location.
    #[command(allow_negative_numbers = true)]
    Accel {
        /// LOCATION:AMPLITUDE:FREQUENCY:SIGMA, repeatable.
        #[arg(long = "profile", value_name = "SPEC")]
        profiles: Vec<String>,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0.02)]
        dt: f64,
        #[arg(long, default_value = "sim")]
        subject: String,
        #[command(flatten)]
        common: SimCommon,
    },
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct FitArgs {
    /// Biomarker CSV or NDJSON (`-` for standard input).
    pub input: PathBuf,
    /// Keep only this subject.
    #[arg(long)]
    pub subject: Option<String>,
    /// Keep only this channel.
    #[arg(long)]
    pub channel: Option<String>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Residual elevation fraction p for recovery time ln(1/p)/θ.
    #[arg(long)]
    pub hrrt_fraction: Option<f64>,
    /// Report file instead of standard output.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct MonitorArgs {
    /// Biomarker CSV or NDJSON (`-` for standard input).
    pub input: PathBuf,
    /// CHANNEL=LN,UN,LR,UR threshold band; empty fields are absent limits.
    #[arg(long = "band", value_name = "SPEC", value_parser = parse_band_flag)]
    pub bands: Vec<(String, BandSection)>,
    /// Trailing trend window, seconds.
    #[arg(long)]
    pub window: Option<f64>,
    /// Forecast horizon, seconds.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Prediction-interval confidence for every band.
    #[arg(long)]
    pub confidence: Option<f64>,
    /// NDJSON alert file instead of standard output.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// JSON summary file instead of standard error.
    #[arg(long, value_name = "PATH")]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct PredictorArgs {
    /// Factor CSV (`-` for standard input).
    pub input: PathBuf,
    /// Target column.
    #[arg(long, default_value = "L")]
    pub target: String,
    #[arg(long)]
    pub min_abs: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Add pairwise interaction terms.
    #[arg(long)]
    pub interactions: bool,
    /// Include the correlation matrix and significant pairs.
    #[arg(long)]
    pub correlate: bool,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct ActivityArgs {
    /// Accelerometer CSV (`-` for standard input).
    pub input: PathBuf,
    /// Tumbling window, seconds.
    #[arg(long)]
    pub window: Option<f64>,
    /// Cluster windows into k groups.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Per-window features (and clusters) as CSV.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

fn flag_for(param: &str) -> &str {
    match param {
        "coefficients" => "--coef",
        "start" => "--start",
        "slope" => "--slope",
        "a" => "--a",
        "d" => "--d",
        "theta" => "--theta",
        "sigma" => "--sigma",
        "n" => "--n",
        "dt" => "--dt",
        "m" => "--m",
        "profile" => "--profile",
        other => other,
    }
}

fn invalid_flag(e: InvalidParams) -> CliError {
    CliError::input(format!("invalid {}: {}", flag_for(e.param), e.reason))
}

fn parse_profile(s: &str) -> Result<LocationProfile> {
    let bad = || {
        CliError::input(format!(
            "invalid --profile `{s}`: expected LOCATION:AMPLITUDE:FREQUENCY:SIGMA"
        ))
    };
    let parts: Vec<&str> = s.split(':').collect();
    let [loc, amp, freq, sigma] = parts[..] else {
        return Err(bad());
    };
    let num = |x: &str| x.trim().parse::<f64>().map_err(|_| bad());
    if loc.is_empty() {
        return Err(bad());
    }
    Ok(LocationProfile {
        location: loc.to_string(),
        amplitude: num(amp)?,
        frequency: num(freq)?,
        noise_sigma: num(sigma)?,
    })
}

const DEFAULT_PROFILES: [&str; 3] = [
    "leg_l:0.8:1.5:0.05",
    "trunk:0.4:1.5:0.05",
    "head:0.1:1.5:0.05",
];

/// Builds the generator spec, labels, output path and target name from
/// `simulate` flags.
pub fn simulate_spec(
    kind: &SimulateKind,
) -> Result<(SimSpec, SeriesLabels, Option<PathBuf>, String)> {
    let target = String::from("L");
    Ok(match kind {
        SimulateKind::Recovery {
            a,
            d,
            theta,
            n,
            sigma,
            dt,
            subject,
            channel,
            unit,
            common,
        } => (
            SimSpec {
                kind: SimKind::Recovery(RecoveryParams {
                    a: *a,
                    d: *d,
                    theta: *theta,
                    noise_sigma: *sigma,
                    n: *n,
                    dt: *dt,
                }),
                seed: common.seed,
            },
            SeriesLabels::new(subject, channel, unit),
            common.out.clone(),
            target,
        ),
        SimulateKind::Drift {
            start,
            slope,
            n,
            sigma,
            dt,
            subject,
            channel,
            unit,
            common,
        } => (
            SimSpec {
                kind: SimKind::Drift(DriftParams {
                    start_value: *start,
                    slope: *slope,
                    noise_sigma: *sigma,
                    n: *n,
                    dt: *dt,
                }),
                seed: common.seed,
            },
            SeriesLabels::new(subject, channel, unit),
            common.out.clone(),
            target,
        ),
        SimulateKind::Panel {
            coef,
            m,
            sigma,
            target,
            common,
        } => {
            let coefficients = coef
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| {
                    CliError::input(format!(
                        "invalid --coef `{coef}`: expected numbers separated by commas"
                    ))
                })?;
            (
                SimSpec {
                    kind: SimKind::Panel(PanelParams {
                        true_coefficients: coefficients,
                        m: *m,
                        noise_sigma: *sigma,
                    }),
                    seed: common.seed,
                },
                SeriesLabels::heart_rate(),
                common.out.clone(),
                target.clone(),
            )
        }
        SimulateKind::Accel {
            profiles,
            n,
            dt,
            subject,
            common,
        } => {
            let specs: Vec<&str> = if profiles.is_empty() {
                DEFAULT_PROFILES.to_vec()
            } else {
                profiles.iter().map(String::as_str).collect()
            };
            (
                SimSpec {
                    kind: SimKind::Accel(AccelParams {
                        profiles: specs
                            .into_iter()
                            .map(parse_profile)
                            .collect::<Result<_>>()?,
                        n: *n,
                        dt: *dt,
                    }),
                    seed: common.seed,
                },
                SeriesLabels::new(subject, "accel", "g"),
                common.out.clone(),
                target,
            )
        }
    })
}

fn is_stdout(p: &Option<PathBuf>) -> bool {
    p.as_ref().is_none_or(|p| p.as_os_str() == "-")
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::compute(e.to_string()))?;
    let mut out = io::open_output(path.unwrap_or(Path::new("-")))?;
    writeln!(out, "{text}")?;
    out.flush()?;
    Ok(())
}

fn cmd_simulate(kind: &SimulateKind) -> Result<()> {
    let (spec, labels, out, target) = simulate_spec(kind)?;
    let data = generate(&spec, &labels).map_err(invalid_flag)?;
    let path = out.clone().unwrap_or_else(|| PathBuf::from("-"));
    match &data {
        Dataset::Series(s) => io::write_biomarkers(&path, &[s])?,
        Dataset::Panel(m) => io::write_factors(io::open_output(&path)?, m, &target)?,
        Dataset::Accel(a) => io::write_accel(io::open_output(&path)?, a)?,
    }
    let summary = SimulateSummary {
        kind: spec.kind.name().into(),
        n: data.len(),
        seed: spec.seed,
        out: out
            .as_ref()
            .filter(|_| !is_stdout(&out))
            .map(|p| p.display().to_string()),
    };
    let text = serde_json::to_string(&summary).map_err(|e| CliError::compute(e.to_string()))?;
    if is_stdout(&out) {
        eprintln!("{text}");
    } else {
        println!("{text}");
    }
    Ok(())
}

fn cmd_fit(args: &FitArgs, file: &FileConfig) -> Result<()> {
    let opts = FitOptions::resolve(&file.fit, args.tol, args.max_iter, args.hrrt_fraction)?;
    let series: Vec<_> = io::read_biomarkers(&args.input)?
        .into_iter()
        .filter(|s| args.subject.as_deref().is_none_or(|x| x == s.subject_id()))
        .filter(|s| args.channel.as_deref().is_none_or(|x| x == s.channel()))
        .collect();
    let [one] = &series[..] else {
        return Err(CliError::input(format!(
            "expected exactly one series to fit, found {}; select one with --subject/--channel",
            series.len()
        )));
    };
    let report = commands::fit(one, &opts)?;
    write_json(args.out.as_deref(), &report)
}

fn cmd_monitor(args: &MonitorArgs, file: &FileConfig) -> Result<()> {
    let opts = MonitorOptions::resolve(
        file,
        args.window,
        args.horizon,
        args.confidence,
        &args.bands,
    )?;
    let series = io::read_biomarkers(&args.input)?;
    let (alerts, summary) = commands::monitor(&series, &opts)?;

    let mut out = io::open_output(args.out.as_deref().unwrap_or(Path::new("-")))?;
    for a in &alerts {
        serde_json::to_writer(&mut out, a).map_err(|e| CliError::compute(e.to_string()))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;

    let text =
        serde_json::to_string_pretty(&summary).map_err(|e| CliError::compute(e.to_string()))?;
    match &args.summary {
        Some(p) => {
            let mut f = io::open_output(p)?;
            writeln!(f, "{text}")?;
            f.flush()?;
        }
        None => eprintln!("{text}"),
    }
    Ok(())
}

fn cmd_predictors(args: &PredictorArgs, file: &FileConfig) -> Result<()> {
    let opts = PredictorOptions {
        min_abs: args
            .min_abs
            .or(file.predictor.min_abs)
            .unwrap_or(DEFAULT_MIN_ABS),
        alpha: args.alpha.or(file.predictor.alpha).unwrap_or(DEFAULT_ALPHA),
        interactions: args.interactions || file.predictor.interactions.unwrap_or(false),
        correlate: args.correlate,
    };
    let m = io::read_factors(&args.input, &args.target)?;
    let report = commands::predictors(&m, &args.target, &opts)?;
    write_json(args.out.as_deref(), &report)
}

fn cmd_activity(args: &ActivityArgs, file: &FileConfig) -> Result<()> {
    let window = args
        .window
        .or(file.activity.window)
        .unwrap_or(DEFAULT_ACTIVITY_WINDOW);
    let locations = file.activity.locations.clone().unwrap_or_default();
    let samples = io::read_accel(&args.input, &locations)?;
    let (report, rows) = commands::activity(&samples, window, args.k, args.seed)?;
    if let Some(p) = &args.out {
        let mut w = csv::Writer::from_writer(io::open_output(p)?);
        for r in &rows {
            w.serialize(r)
                .map_err(|e| CliError::input(format!("CSV: {e}")))?;
        }
        w.flush()?;
    }
    write_json(None, &report)
}

pub fn run(cli: &Cli) -> Result<()> {
    let file = FileConfig::load_opt(cli.config.as_deref())?;
    match &cli.command {
        Command::Simulate { kind } => cmd_simulate(kind),
        Command::FitRecovery(a) => cmd_fit(a, &file),
        Command::Monitor(a) => cmd_monitor(a, &file),
        Command::Predictors(a) => cmd_predictors(a, &file),
        Command::Activity(a) => cmd_activity(a, &file),
    }
}
