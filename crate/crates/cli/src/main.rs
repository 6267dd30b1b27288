use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gnss_grnn::harness::output::{
    write_forecast_csv, write_json, write_station_csv, write_sweep_csv, ForecastTable,
    ReportDocument, TimingDocument, REPORT_SCHEMA_VERSION,
};
use gnss_grnn::harness::{
    compare_methods, evaluate_stations, forecast_component, generate_synthetic, run_sweep,
    time_methods, EvaluationSettings, SyntheticKind, SyntheticParams, ValueBasis,
};
use gnss_grnn::series::DEFAULT_GAP_FACTOR;
use gnss_grnn::{
    amplitude, detect_gaps, parse_series, write_series_csv, BandwidthRule, Component,
    ForecastError, GrnnConfig, SeriesFormat, SmapeVariant, StationSeries, ThetaFit, UpdateMode,
};
use rayon::prelude::*;
use serde::Serialize;

mod error;

use error::CliError;

/// Forecast GNSS station position time series with a GRNN and a Theta baseline.
#[derive(Debug, Parser)]
#[command(name = "gnss-grnn", version)]
struct Cli {
    /// Worker threads for independent stations and components.
    #[arg(long, global = true, env = "GNSS_GRNN_JOBS")]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Span, continuity, gaps and per-component amplitude of each station.
    Inspect(InspectArgs),
    /// One-step GRNN forecast table for every component.
    Predict(PredictArgs),
    /// Accuracy against training size (1..=v-max) for every component and mode.
    Sweep(SweepArgs),
    /// GRNN and Theta station reports plus their relative accuracy.
    Compare(CompareArgs),
    /// Write a synthetic station file.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct InspectArgs {
    #[arg(required = true)]
    paths: Vec<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_GAP_FACTOR)]
    gap_factor: f64,
    #[arg(long, value_enum, default_value_t = InspectFormat::Text)]
    format: InspectFormat,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum InspectFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Recursive,
    TeacherForced,
}

impl From<ModeArg> for UpdateMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Recursive => UpdateMode::Recursive,
            ModeArg::TeacherForced => UpdateMode::TeacherForced,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SweepModes {
    Both,
    Recursive,
    TeacherForced,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BasisArg {
    Raw,
    Anomaly,
}

impl From<BasisArg> for ValueBasis {
    fn from(b: BasisArg) -> Self {
        match b {
            BasisArg::Raw => ValueBasis::Raw,
            BasisArg::Anomaly => ValueBasis::Anomaly,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SmapeArg {
    PerTerm,
    FixedDenominator,
}

impl From<SmapeArg> for SmapeVariant {
    fn from(s: SmapeArg) -> Self {
        match s {
            SmapeArg::PerTerm => SmapeVariant::PerTerm,
            SmapeArg::FixedDenominator => SmapeVariant::FixedDenominator,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ThetaFitArg {
    PerOrigin,
    Global,
}

impl From<ThetaFitArg> for ThetaFit {
    fn from(t: ThetaFitArg) -> Self {
        match t {
            ThetaFitArg::PerOrigin => ThetaFit::PerOrigin,
            ThetaFitArg::Global => ThetaFit::Global,
        }
    }
}

fn parse_bandwidth(s: &str) -> Result<BandwidthRule, String> {
    match s {
        "window-std" => Ok(BandwidthRule::WindowStd),
        "mean-spacing" => Ok(BandwidthRule::MeanSpacing),
        other => {
            let h: f64 = other.parse().map_err(|_| {
                format!(
                    "expected window-std, mean-spacing or a positive number of days, got `{other}`"
                )
            })?;
            let rule = BandwidthRule::Fixed(h);
            rule.validate().map_err(|e| e.to_string())?;
            Ok(rule)
        }
    }
}

/// GRNN settings shared by the backtest subcommands.
#[derive(Debug, Args)]
struct GrnnArgs {
    /// Training size v.
    #[arg(short = 'v', long = "training-size", default_value_t = 100)]
    training_size: usize,
    /// Kernel bandwidth: window-std, mean-spacing, or a fixed value in days.
    #[arg(long, default_value = "window-std", value_parser = parse_bandwidth)]
    bandwidth: BandwidthRule,
    #[arg(long, value_enum, default_value_t = ModeArg::Recursive)]
    mode: ModeArg,
    #[arg(long, value_enum, default_value_t = BasisArg::Raw)]
    basis: BasisArg,
    #[arg(long, value_enum, default_value_t = SmapeArg::PerTerm)]
    smape: SmapeArg,
}

/// Adaptive training-size options; only meaningful for per-target backtests.
#[derive(Debug, Args)]
struct ThresholdArgs {
    /// Error threshold T in meters; enables the adaptive training-size loop.
    #[arg(long)]
    threshold: Option<f64>,
    /// Largest training size the adaptive loop may reach.
    #[arg(long, default_value_t = 1000)]
    max_training_size: usize,
    /// Training-size increment of the adaptive loop.
    #[arg(long, default_value_t = 1)]
    training_size_step: usize,
}

impl GrnnArgs {
    fn config(&self, threshold: Option<&ThresholdArgs>) -> Result<GrnnConfig, CliError> {
        let mut cfg = GrnnConfig::new(self.training_size)
            .with_bandwidth(self.bandwidth)
            .with_mode(self.mode.into());
        if let Some(t) = threshold {
            cfg.threshold = t.threshold;
            cfg.max_training_size = t.max_training_size;
            cfg.training_size_step = t.training_size_step;
        }
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(required = true)]
    paths: Vec<PathBuf>,
    #[command(flatten)]
    grnn: GrnnArgs,
    #[command(flatten)]
    threshold: ThresholdArgs,
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(required = true)]
    paths: Vec<PathBuf>,
    #[arg(long, default_value_t = 100)]
    v_max: usize,
    #[arg(long, default_value_t = 1)]
    v_min: usize,
    #[arg(long, value_enum, default_value_t = SweepModes::Both)]
    modes: SweepModes,
    #[arg(long, default_value = "window-std", value_parser = parse_bandwidth)]
    bandwidth: BandwidthRule,
    #[arg(long, value_enum, default_value_t = BasisArg::Raw)]
    basis: BasisArg,
    #[arg(long, value_enum, default_value_t = SmapeArg::PerTerm)]
    smape: SmapeArg,
    /// Output file; with several inputs, one file per station is written as
    /// `<stem>.<station>.csv`.
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(required = true)]
    paths: Vec<PathBuf>,
    #[command(flatten)]
    grnn: GrnnArgs,
    #[command(flatten)]
    threshold: ThresholdArgs,
    /// Theta window; defaults to the GRNN training size.
    #[arg(long)]
    theta_window: Option<usize>,
    #[arg(long, value_enum, default_value_t = ThetaFitArg::PerOrigin)]
    theta_fit: ThetaFitArg,
    #[arg(long, default_value_t = DEFAULT_GAP_FACTOR)]
    gap_factor: f64,
    /// JSON report (stations and accuracy ratios).
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Station table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Time both methods and write the timing report here.
    #[arg(long)]
    timing_out: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    repetitions: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    Constant,
    Linear,
    TrendPlusAnnual,
    GappedTrend,
}

impl From<KindArg> for SyntheticKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Constant => SyntheticKind::Constant,
            KindArg::Linear => SyntheticKind::Linear,
            KindArg::TrendPlusAnnual => SyntheticKind::TrendPlusAnnual,
            KindArg::GappedTrend => SyntheticKind::GappedTrend,
        }
    }
}

fn parse_gap(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected START:LEN in days, got `{s}`"))?;
    let start = a
        .trim()
        .parse()
        .map_err(|_| format!("bad gap start `{a}`"))?;
    let len = b
        .trim()
        .parse()
        .map_err(|_| format!("bad gap length `{b}`"))?;
    Ok((start, len))
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, value_enum, default_value_t = KindArg::TrendPlusAnnual)]
    kind: KindArg,
    #[arg(long, default_value_t = 2000)]
    length: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "SYNT")]
    station: String,
    /// Trend in meters per day.
    #[arg(long, default_value_t = 5e-5)]
    slope: f64,
    /// Annual amplitude in meters.
    #[arg(long, default_value_t = 0.005)]
    amplitude: f64,
    /// White-noise standard deviation in meters.
    #[arg(long, default_value_t = 0.001)]
    noise: f64,
    /// Removed span `START:LEN` in days (repeatable).
    #[arg(long = "gap", value_parser = parse_gap)]
    gaps: Vec<(usize, usize)>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::io(p, e))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load(paths: &[PathBuf]) -> Result<Vec<StationSeries>, CliError> {
    paths
        .par_iter()
        .map(|p| {
            let file = File::open(p).map_err(|e| CliError::io(p, e))?;
            let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("station");
            parse_series(io::BufReader::new(file), SeriesFormat::Csv, stem).map_err(|source| {
                CliError::Series {
                    path: p.clone(),
                    source,
                }
            })
        })
        .collect()
}

#[derive(Serialize)]
struct InspectSummary {
    station: String,
    country: Option<String>,
    first_mjd: f64,
    last_mjd: f64,
    epochs: usize,
    state: gnss_grnn::DataState,
    gaps: usize,
    largest_gap_days: f64,
    amplitude_m: [f64; 3],
}

fn cmd_inspect(args: &InspectArgs) -> Result<(), CliError> {
    let stations = load(&args.paths)?;
    let mut summaries = Vec::with_capacity(stations.len());
    for s in &stations {
        let gaps = detect_gaps(s, args.gap_factor).map_err(|e| CliError::Usage(e.to_string()))?;
        let (first, last) = s.time_span();
        summaries.push(InspectSummary {
            station: s.station_id().to_string(),
            country: s.country().map(str::to_string),
            first_mjd: first.mjd(),
            last_mjd: last.mjd(),
            epochs: s.len(),
            state: gaps.state,
            gaps: gaps.gaps.len(),
            largest_gap_days: gaps.largest_gap_days,
            amplitude_m: Component::ALL.map(|c| amplitude(s.component(c))),
        });
    }
    let mut out = output(None)?;
    match args.format {
        InspectFormat::Json => write_json(&summaries, &mut out)?,
        InspectFormat::Text => {
            for s in &summaries {
                match &s.country {
                    Some(c) => writeln!(out, "station: {} ({c})", s.station)?,
                    None => writeln!(out, "station: {}", s.station)?,
                }
                writeln!(
                    out,
                    "span: MJD {} - {} ({:.2} - {:.2}), {} epochs",
                    s.first_mjd,
                    s.last_mjd,
                    gnss_grnn::Epoch::new(s.first_mjd)?.decimal_year(),
                    gnss_grnn::Epoch::new(s.last_mjd)?.decimal_year(),
                    s.epochs
                )?;
                if s.gaps == 0 {
                    writeln!(out, "state: continuous")?;
                } else {
                    writeln!(
                        out,
                        "state: discontinuous, {} gap{}, largest gap {} days",
                        s.gaps,
                        if s.gaps == 1 { "" } else { "s" },
                        s.largest_gap_days
                    )?;
                }
                writeln!(
                    out,
                    "amplitude: X {:.6} m, Y {:.6} m, Z {:.6} m",
                    s.amplitude_m[0], s.amplitude_m[1], s.amplitude_m[2]
                )?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_predict(args: &PredictArgs) -> Result<(), CliError> {
    let cfg = args.grnn.config(Some(&args.threshold))?;
    let basis: ValueBasis = args.grnn.basis.into();
    let stations = load(&args.paths)?;
    let jobs: Vec<(&StationSeries, Component)> = stations
        .iter()
        .flat_map(|s| Component::ALL.map(|c| (s, c)))
        .collect();
    let tables = jobs
        .par_iter()
        .map(|&(s, c)| {
            let records = forecast_component(s.component(c), &cfg, cfg.training_size, basis)?;
            Ok(ForecastTable {
                station: s.station_id().to_string(),
                component: c,
                records,
            })
        })
        .collect::<Result<Vec<_>, ForecastError>>()?;
    let mut out = output(args.out.as_deref())?;
    match args.format {
        OutputFormat::Csv => write_forecast_csv(&tables, &mut out)?,
        OutputFormat::Json => write_json(&tables, &mut out)?,
    }
    out.flush()?;
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let modes: &[UpdateMode] = match args.modes {
        SweepModes::Both => &[UpdateMode::Recursive, UpdateMode::TeacherForced],
        SweepModes::Recursive => &[UpdateMode::Recursive],
        SweepModes::TeacherForced => &[UpdateMode::TeacherForced],
    };
    if args.v_min == 0 || args.v_min > args.v_max {
        return Err(CliError::Usage(format!(
            "need 1 <= v-min <= v-max, got {}..={}",
            args.v_min, args.v_max
        )));
    }
    let base = GrnnConfig::new(args.v_min).with_bandwidth(args.bandwidth);
    base.validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let stations = load(&args.paths)?;
    let results = stations
        .iter()
        .map(|s| {
            run_sweep(
                s,
                args.v_min..=args.v_max,
                &base,
                modes,
                args.basis.into(),
                args.smape.into(),
            )
        })
        .collect::<Result<Vec<_>, _>>()?;

    for r in &results {
        let path = match (&args.out, results.len()) {
            (Some(p), 1) => Some(p.clone()),
            (Some(p), _) => {
                let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("sweep");
                let ext = p.extension().and_then(|s| s.to_str()).unwrap_or("csv");
                Some(p.with_file_name(format!("{stem}.{}.{ext}", r.station_id)))
            }
            (None, _) => None,
        };
        let mut out = output(path.as_deref())?;
        match args.format {
            OutputFormat::Csv => {
                if path.is_none() && results.len() > 1 {
                    writeln!(out, "# station: {}", r.station_id)?;
                }
                write_sweep_csv(r, &mut out)?
            }
            OutputFormat::Json => write_json(r, &mut out)?,
        }
        out.flush()?;
    }
    Ok(())
}

fn cmd_compare(args: &CompareArgs) -> Result<(), CliError> {
    let grnn = args.grnn.config(Some(&args.threshold))?;
    if !(args.gap_factor.is_finite() && args.gap_factor >= 1.0) {
        return Err(CliError::Usage(format!(
            "gap factor must be >= 1, got {}",
            args.gap_factor
        )));
    }
    let settings = EvaluationSettings {
        theta_window: args.theta_window.unwrap_or(grnn.training_size),
        grnn,
        theta_fit: args.theta_fit.into(),
        basis: args.grnn.basis.into(),
        gap_factor: args.gap_factor,
        smape: args.grnn.smape.into(),
    };
    if settings.theta_window < gnss_grnn::theta::MIN_WINDOW {
        return Err(CliError::Usage(format!(
            "theta window must be at least {}",
            gnss_grnn::theta::MIN_WINDOW
        )));
    }
    if args.timing_out.is_some() && settings.grnn.threshold.is_some() {
        return Err(CliError::Usage(
            "timing runs use a fixed training size; drop --threshold".into(),
        ));
    }
    let stations = load(&args.paths)?;
    let reports = evaluate_stations(&stations, &settings)?;

    let timing = match &args.timing_out {
        Some(_) => Some(time_methods(&stations, &settings, args.repetitions)?),
        None => None,
    };
    let comparison = compare_methods(&reports, None)?;

    let mut out = output(args.out.as_deref())?;
    write_json(
        &ReportDocument::new(&settings, &reports, &comparison),
        &mut out,
    )?;
    out.flush()?;
    if let Some(p) = &args.csv {
        let mut out = output(Some(p))?;
        write_station_csv(&reports, &mut out)?;
        out.flush()?;
    }
    if let (Some(p), Some(t)) = (&args.timing_out, &timing) {
        let mut out = output(Some(p))?;
        write_json(
            &TimingDocument {
                schema_version: REPORT_SCHEMA_VERSION,
                timing: t,
                time_ratio: t.time_ratio(),
            },
            &mut out,
        )?;
        out.flush()?;
        eprintln!(
            "timing: GRNN {:.6} s, Theta {:.6} s (median of {}), ratio {}",
            t.grnn_median_s,
            t.theta_median_s,
            t.repetitions,
            t.time_ratio()
                .value
                .map_or("undefined".to_string(), |r| format!("{r:.3}"))
        );
    }
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    let kind: SyntheticKind = args.kind.into();
    if !args.gaps.is_empty() && kind != SyntheticKind::GappedTrend {
        return Err(CliError::Usage("--gap requires --kind gapped-trend".into()));
    }
    let params = SyntheticParams {
        station_id: args.station.clone(),
        slope_m_per_day: args.slope,
        annual_amplitude_m: args.amplitude,
        noise_m: args.noise,
        gaps: args.gaps.clone(),
        ..Default::default()
    };
    let series = generate_synthetic(kind, args.length, args.seed, &params)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let mut out = output(args.out.as_deref())?;
    write_series_csv(&series, &mut out)?;
    out.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    match &cli.command {
        Command::Inspect(a) => cmd_inspect(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Synth(a) => cmd_synth(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
