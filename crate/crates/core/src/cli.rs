//! Command-line front end.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::RecvTimeoutError;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conformance::{check_log, CheckerConfig, CheckerEvent, Clock, CostReport, StreamChecker, TickPolicy};
use crate::eval::{render_report, render_table, run_experiment, EvalError, ExperimentSpec};
use crate::ingest::{encode_line, parse_xes_path, replay, split_point, EventLog, ReplayOptions, StreamSource, XesError};
use crate::miner::{mine, MinerConfig, StddevMode};
use crate::model::{ModelError, ProfileError, TemporalProfile, TimedProcessModel};

const PARAMETERS: &str = "\
Parameters:
  κ (kappa)  per-task z-score threshold, set in the model file (default 3);
             also the minimum support of a mined distance (--min-support)
  ω (omega)  per-task or per-distance weight, set in the model file (default 1)
  φ (phi)    global multiplier on every temporal cost (--phi)
  TSIZE      most process instances held by the stream checker (--tsize)

A deviation costs ω·φ·z once z = |x − μ|/σ exceeds κ.

Environment:
  TEMPOGRAPH_LOG_LEVEL  error, warn, info, debug or trace";

#[derive(Debug, Parser)]
#[command(name = "tempograph", version, about = "Time-aware conformance checking for event logs and streams", after_help = PARAMETERS)]
pub struct Cli {
    /// JSON run configuration; flags override its values
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Overrides TEMPOGRAPH_LOG_LEVEL and the configuration file
    #[arg(long, global = true, value_name = "LEVEL")]
    pub log_level: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mine a temporal profile from a training log
    Mine(MineArgs),
    /// Check a log or a live stream against a timed model
    Check(CheckArgs),
    /// Emit a log as a timestamp-ordered line-protocol stream
    Replay(ReplayArgs),
    /// Render a saved cost report
    Report(ReportArgs),
    /// Run an experiment spec (split, mine, check, compare)
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args, Default)]
pub struct SplitArgs {
    /// Use only the first N traces (mine) or skip them (check, replay)
    #[arg(long, value_name = "N", conflicts_with = "split")]
    pub take_traces: Option<usize>,
    /// Training fraction; the first ⌈F·traces⌉ traces train, the rest test
    #[arg(long, value_name = "F")]
    pub split: Option<f64>,
}

#[derive(Debug, Args)]
pub struct MineArgs {
    /// XES log (optionally gzipped)
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Model file; required for --out-model
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// κ of the mining step: distances with fewer samples are dropped
    #[arg(long, value_name = "N")]
    pub min_support: Option<u64>,
    #[arg(long, value_enum)]
    pub stddev_mode: Option<StddevArg>,
    #[command(flatten)]
    pub split: SplitArgs,
    /// Write the profile as JSON
    #[arg(long, value_name = "FILE")]
    pub out_profile: Option<PathBuf>,
    /// Write the model with the profile embedded
    #[arg(long, value_name = "FILE")]
    pub out_model: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StddevArg {
    Population,
    Sample,
}

impl From<StddevArg> for StddevMode {
    fn from(a: StddevArg) -> Self {
        match a {
            StddevArg::Population => StddevMode::Population,
            StddevArg::Sample => StddevMode::Sample,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ClockArg {
    Wall,
    StreamTime,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Offline: XES log to check
    #[arg(long, conflicts_with = "stream")]
    pub log: Option<PathBuf>,
    /// Live: `-` for stdin, `tcp:HOST:PORT` to listen, or a line-protocol file
    #[arg(long, value_name = "SOURCE")]
    pub stream: Option<String>,
    /// Model file (with or without an embedded profile)
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Profile JSON; replaces any profile embedded in the model
    #[arg(long)]
    pub profile: Option<PathBuf>,
    #[command(flatten)]
    pub split: SplitArgs,
    /// TSIZE: most process instances held at once
    #[arg(long, value_name = "N")]
    pub tsize: Option<usize>,
    /// φ: global multiplier on temporal costs
    #[arg(long)]
    pub phi: Option<f64>,
    /// Default κ for tasks the model file does not annotate
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Default ω for tasks the model file does not annotate
    #[arg(long)]
    pub omega: Option<f64>,
    /// Count z = κ as a deviation (default: only z > κ)
    #[arg(long)]
    pub inclusive: bool,
    /// `per-event`, or a re-estimation interval in seconds for all traces
    #[arg(long, value_name = "POLICY")]
    pub tick: Option<String>,
    #[arg(long, value_enum)]
    pub clock: Option<ClockArg>,
    /// Write the cost report (JSON)
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
    /// Write deviation records as JSON lines (default: stdout)
    #[arg(long, value_name = "FILE")]
    pub deviations: Option<PathBuf>,
    /// Write deviation records as CSV
    #[arg(long, value_name = "FILE")]
    pub csv: Option<PathBuf>,
    /// Exit with status 1 when more deviations than this are found
    #[arg(long, value_name = "N")]
    pub budget: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[command(flatten)]
    pub split: SplitArgs,
    /// Stream seconds per wall second; 0 emits without pausing
    #[arg(long, default_value_t = 0.0)]
    pub speed: f64,
    /// Extra random pause per event, up to this many milliseconds
    #[arg(long, default_value_t = 0)]
    pub jitter_ms: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `stdout` or `tcp:HOST:PORT`
    #[arg(long, default_value = "stdout")]
    pub sink: String,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ReportFormat {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Cost report written by `check --report`
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    pub format: ReportFormat,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Experiment spec (JSON)
    pub spec: PathBuf,
    /// Write the full experiment report (JSON)
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Exit with status 1 unless every assertion holds
    #[arg(long)]
    pub assert: bool,
}

/// Output locations in a run configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Outputs {
    pub profile: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub deviations: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

/// Run configuration file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub model: Option<PathBuf>,
    pub profile: Option<PathBuf>,
    pub log: Option<PathBuf>,
    pub miner: MinerConfig,
    pub checker: CheckerConfig,
    pub outputs: Outputs,
    pub log_level: Option<String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let bytes = read(path)?;
        let mut cfg: RunConfig = serde_json::from_slice(&bytes).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(v) = p.as_mut() {
                *v = base.join(&*v);
            }
        };
        fix(&mut cfg.model);
        fix(&mut cfg.profile);
        fix(&mut cfg.log);
        fix(&mut cfg.outputs.profile);
        fix(&mut cfg.outputs.model);
        fix(&mut cfg.outputs.report);
        fix(&mut cfg.outputs.deviations);
        fix(&mut cfg.outputs.csv);
        Ok(cfg)
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Output(#[from] io::Error),
    #[error("{}: {message}", path.display())]
    Config { path: PathBuf, message: String },
    #[error("missing {0}")]
    Missing(&'static str),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Xes(#[from] XesError),
    #[error("{}: {source}", path.display())]
    Model { path: PathBuf, source: ModelError },
    #[error("{}: {source}", path.display())]
    Profile { path: PathBuf, source: ProfileError },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("stream source {source_name}: {error}")]
    Source { source_name: String, error: io::Error },
    #[error("sink {sink}: {error}")]
    Sink { sink: String, error: io::Error },
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn init_logging(flag: Option<&str>, config: Option<&str>) {
    let mut builder = match flag {
        Some(level) => {
            let mut b = env_logger::Builder::new();
            b.parse_filters(level);
            b
        }
        None => env_logger::Builder::from_env(
            env_logger::Env::new().filter_or("TEMPOGRAPH_LOG_LEVEL", config.unwrap_or("warn")),
        ),
    };
    builder.target(env_logger::Target::Stderr);
    let _ = builder.try_init();
}

fn load_log(path: &Path) -> Result<EventLog, CliError> {
    let parsed = parse_xes_path(path)?;
    for w in &parsed.warnings {
        warn!("{}: {w}", path.display());
    }
    info!(
        "{}: {} traces, {} events",
        path.display(),
        parsed.log.traces.len(),
        parsed.log.event_count()
    );
    Ok(parsed.log)
}

/// Loads a model file, replacing its default (ω, κ) fields when given.
fn load_model(path: &Path, omega: Option<f64>, kappa: Option<f64>) -> Result<TimedProcessModel, CliError> {
    let bytes = read(path)?;
    let model_err = |source| CliError::Model {
        path: path.to_path_buf(),
        source,
    };
    if omega.is_none() && kappa.is_none() {
        return TimedProcessModel::from_json(&bytes).map_err(model_err);
    }
    let mut value: serde_json::Value =
        serde_json::from_slice(&bytes).map_err(|e| model_err(ModelError::Json(e)))?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| CliError::Invalid(format!("{}: model must be a JSON object", path.display())))?;
    let defaults = obj
        .entry("defaults")
        .or_insert_with(|| serde_json::json!({}));
    if let Some(d) = defaults.as_object_mut() {
        if let Some(w) = omega {
            d.insert("omega".into(), w.into());
        }
        if let Some(k) = kappa {
            d.insert("kappa".into(), k.into());
        }
    }
    let bytes = serde_json::to_vec(&value).expect("value serializes");
    TimedProcessModel::from_json(&bytes).map_err(model_err)
}

fn check_fraction(f: f64) -> Result<f64, CliError> {
    if f > 0.0 && f < 1.0 {
        Ok(f)
    } else {
        Err(CliError::Invalid(format!("--split must lie strictly between 0 and 1, got {f}")))
    }
}

/// Number of leading (training) traces selected by the split flags.
fn leading(split: &SplitArgs, traces: usize) -> Result<Option<usize>, CliError> {
    Ok(match (split.take_traces, split.split) {
        (Some(n), _) => Some(n.min(traces)),
        (None, Some(f)) => Some(split_point(traces, check_fraction(f)?)),
        (None, None) => None,
    })
}

fn training_part(log: EventLog, split: &SplitArgs) -> Result<EventLog, CliError> {
    Ok(match leading(split, log.traces.len())? {
        Some(n) => log.split_at(n).0,
        None => log,
    })
}

fn test_part(log: EventLog, split: &SplitArgs) -> Result<EventLog, CliError> {
    Ok(match leading(split, log.traces.len())? {
        Some(n) => log.split_at(n).1,
        None => log,
    })
}

fn cmd_mine(args: MineArgs, cfg: RunConfig, out: &mut dyn Write) -> Result<i32, CliError> {
    let log_path = args.log.or(cfg.log).ok_or(CliError::Missing("--log"))?;
    let log = training_part(load_log(&log_path)?, &args.split)?;
    let miner = MinerConfig {
        min_support: args.min_support.unwrap_or(cfg.miner.min_support),
        stddev_mode: args.stddev_mode.map_or(cfg.miner.stddev_mode, Into::into),
    };
    let outcome = mine(&log, &miner);
    if outcome.negative_samples > 0 {
        warn!("{} negative distance samples; the log is not time-ordered", outcome.negative_samples);
    }
    writeln!(out, "Task durations (s), {} traces", log.traces.len())?;
    write!(out, "{}", render_table(outcome.profile.durations()))?;
    writeln!(out, "\nTemporal distances (s), min support {}", miner.min_support)?;
    write!(out, "{}", render_table(outcome.profile.distances()))?;

    if let Some(path) = args.out_profile.or(cfg.outputs.profile) {
        write_file(&path, &outcome.profile.to_json())?;
    }
    if let Some(path) = args.out_model.or(cfg.outputs.model) {
        let model_path = args.model.or(cfg.model).ok_or(CliError::Missing("--model (needed by --out-model)"))?;
        let model = load_model(&model_path, None, None)?.infuse(outcome.profile);
        write_file(&path, &model.to_json())?;
    }
    Ok(0)
}

fn parse_tick(raw: &str) -> Result<TickPolicy, CliError> {
    if raw == "per-event" {
        return Ok(TickPolicy::PerEvent);
    }
    let secs: f64 = raw
        .strip_suffix('s')
        .unwrap_or(raw)
        .parse()
        .map_err(|_| CliError::Invalid(format!("--tick expects `per-event` or seconds, got '{raw}'")))?;
    Ok(TickPolicy::Periodic(secs))
}

fn checker_config(args: &CheckArgs, base: CheckerConfig) -> Result<CheckerConfig, CliError> {
    let cfg = CheckerConfig {
        tsize: args.tsize.unwrap_or(base.tsize),
        phi: args.phi.unwrap_or(base.phi),
        inclusive_threshold: args.inclusive || base.inclusive_threshold,
        tick_policy: match &args.tick {
            Some(raw) => parse_tick(raw)?,
            None => base.tick_policy,
        },
        clock: match args.clock {
            Some(ClockArg::Wall) => Clock::Wall,
            Some(ClockArg::StreamTime) => Clock::StreamTime,
            None => base.clock,
        },
        prefix_cap: base.prefix_cap,
    };
    cfg.validate().map_err(CliError::Invalid)?;
    Ok(cfg)
}

fn finish_check(report: &CostReport, args: &CheckArgs, cfg: &RunConfig, out: &mut dyn Write) -> Result<i32, CliError> {
    if let Some(path) = args.report.clone().or(cfg.outputs.report.clone()) {
        write_file(&path, &(report.to_json() + "\n"))?;
    }
    if let Some(path) = args.csv.clone().or(cfg.outputs.csv.clone()) {
        let mut w = create(&path)?;
        report.write_csv(&mut w)?;
        w.flush()?;
    }
    let total = report.total_deviations();
    let c = &report.counters;
    let structural: f64 = report.traces.iter().fold(0.0, |acc, t| acc + t.structural);
    eprintln!(
        "{} traces, {} events; durations {}/{} deviating, distances {}/{} deviating, {} unfinished penalties, structural cost {}",
        report.traces.len(),
        c.events,
        c.duration_deviations,
        c.duration_checked,
        c.distance_deviations,
        c.distance_checked,
        c.unfinished_penalties,
        structural
    );
    out.flush()?;
    match args.budget {
        Some(budget) if total > budget => {
            eprintln!("{total} deviations exceed the budget of {budget}");
            Ok(1)
        }
        _ => Ok(0),
    }
}

fn cmd_check(args: CheckArgs, cfg: RunConfig, out: &mut dyn Write) -> Result<i32, CliError> {
    let model_path = args.model.clone().or(cfg.model.clone()).ok_or(CliError::Missing("--model"))?;
    let mut model = load_model(&model_path, args.omega, args.kappa)?;
    if let Some(path) = args.profile.clone().or(cfg.profile.clone()) {
        let profile = TemporalProfile::from_json(&read(&path)?).map_err(|source| CliError::Profile { path, source })?;
        model = model.infuse(profile);
    }
    if model.profile().is_empty() {
        warn!("the model has no temporal profile; only structural costs apply");
    }
    let model = Arc::new(model);
    let config = checker_config(&args, cfg.checker)?;
    let deviations_path = args.deviations.clone().or(cfg.outputs.deviations.clone());

    if let Some(source) = &args.stream {
        return check_live(source, model, config, deviations_path, &args, &cfg, out);
    }
    let log_path = args.log.clone().or(cfg.log.clone()).ok_or(CliError::Missing("--log or --stream"))?;
    let log = test_part(load_log(&log_path)?, &args.split)?;
    let report = check_log(&log, model, config);
    match &deviations_path {
        Some(path) => {
            let mut w = create(path)?;
            for r in &report.deviations {
                writeln!(w, "{}", r.to_line())?;
            }
            w.flush()?;
        }
        None => {
            for r in &report.deviations {
                writeln!(out, "{}", r.to_line())?;
            }
        }
    }
    finish_check(&report, &args, &cfg, out)
}

#[allow(clippy::too_many_arguments)]
fn check_live(
    source: &str,
    model: Arc<TimedProcessModel>,
    config: CheckerConfig,
    deviations_path: Option<PathBuf>,
    args: &CheckArgs,
    cfg: &RunConfig,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let stream = StreamSource::parse(source);
    let (rx, bound) = stream.spawn(1024).map_err(|error| CliError::Source {
        source_name: source.to_string(),
        error,
    })?;
    if let Some(addr) = bound {
        eprintln!("listening on {addr}");
    }

    let lines: Box<dyn Write + Send> = match &deviations_path {
        Some(path) => Box::new(create(path)?),
        None => Box::new(io::stdout()),
    };
    let lines = Arc::new(Mutex::new(lines));
    let sink_lines = Arc::clone(&lines);
    let mut checker = StreamChecker::new(model, config).with_sink(Box::new(move |ev| {
        if let CheckerEvent::Deviation(r) = ev {
            let mut w = sink_lines.lock().expect("sink lock");
            let _ = writeln!(w, "{}", r.to_line());
            let _ = w.flush();
        }
    }));

    let stop = Arc::new(AtomicBool::new(false));
    let flag = Arc::clone(&stop);
    if let Err(e) = ctrlc::set_handler(move || flag.store(true, Ordering::SeqCst)) {
        warn!("cannot install interrupt handler: {e}");
    }
    let poll = match (config.tick_policy, config.clock) {
        (TickPolicy::Periodic(s), Clock::Wall) => Duration::from_secs_f64(s.min(0.2)),
        _ => Duration::from_millis(200),
    };
    let mut last_wall_tick = std::time::Instant::now();
    while !stop.load(Ordering::SeqCst) {
        match rx.recv_timeout(poll) {
            Ok(ev) => {
                checker.push(&ev);
            }
            Err(RecvTimeoutError::Timeout) => {}
            Err(RecvTimeoutError::Disconnected) => break,
        }
        if let (TickPolicy::Periodic(s), Clock::Wall) = (config.tick_policy, config.clock) {
            if last_wall_tick.elapsed().as_secs_f64() >= s {
                checker.tick();
                last_wall_tick = std::time::Instant::now();
            }
        }
    }
    let report = checker.finish();
    lines.lock().expect("sink lock").flush()?;
    finish_check(&report, args, cfg, out)
}

fn cmd_replay(args: ReplayArgs, cfg: RunConfig, out: &mut dyn Write) -> Result<i32, CliError> {
    let log_path = args.log.or(cfg.log).ok_or(CliError::Missing("--log"))?;
    let log = test_part(load_log(&log_path)?, &args.split)?;
    if !(args.speed >= 0.0) || !args.speed.is_finite() {
        return Err(CliError::Invalid(format!("--speed must be >= 0, got {}", args.speed)));
    }
    let options = ReplayOptions {
        speed: args.speed,
        jitter: Duration::from_millis(args.jitter_ms),
        seed: args.seed,
    };
    let mut tcp;
    let sink: &mut dyn Write = if args.sink == "stdout" || args.sink == "-" {
        out
    } else if let Some(addr) = args.sink.strip_prefix("tcp:") {
        tcp = BufWriter::new(TcpStream::connect(addr).map_err(|error| CliError::Sink {
            sink: args.sink.clone(),
            error,
        })?);
        &mut tcp
    } else {
        return Err(CliError::Invalid(format!("--sink expects `stdout` or `tcp:HOST:PORT`, got '{}'", args.sink)));
    };
    let paced = args.speed > 0.0 || args.jitter_ms > 0;
    for ev in replay(&log, options) {
        writeln!(sink, "{}", encode_line(&ev)).map_err(|error| CliError::Sink {
            sink: args.sink.clone(),
            error,
        })?;
        if paced {
            sink.flush()?;
        }
    }
    sink.flush()?;
    Ok(0)
}

fn cmd_report(args: ReportArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let bytes = read(&args.input)?;
    let report = CostReport::from_json(&bytes).map_err(|e| CliError::Config {
        path: args.input.clone(),
        message: e.to_string(),
    })?;
    match args.format {
        ReportFormat::Json => writeln!(out, "{}", report.to_json())?,
        ReportFormat::Csv => report.write_csv(&mut *out)?,
        ReportFormat::Text => {
            let width = report.traces.iter().map(|t| t.trace_id.len()).max().unwrap_or(5).max(5);
            writeln!(
                out,
                "{:<width$} | {:>6} | {:>10} | {:>12} | {:>12} | {:>4}",
                "trace", "events", "structural", "temporal", "combined", "devs"
            )?;
            for t in &report.traces {
                let mark = if t.evicted { " (evicted)" } else { "" };
                writeln!(
                    out,
                    "{:<width$} | {:>6} | {:>10} | {:>12.2} | {:>12.2} | {:>4}{mark}",
                    t.trace_id, t.events, t.structural, t.temporal, t.combined, t.deviations
                )?;
            }
            let c = &report.counters;
            writeln!(out)?;
            writeln!(out, "events                {}", c.events)?;
            writeln!(out, "durations checked     {} ({} deviating)", c.duration_checked, c.duration_deviations)?;
            writeln!(out, "distances checked     {} ({} deviating)", c.distance_checked, c.distance_deviations)?;
            writeln!(out, "unfinished penalties  {}", c.unfinished_penalties)?;
            writeln!(out, "foreign events        {}", c.foreign_events)?;
            writeln!(out, "evictions             {}", c.evictions)?;
        }
    }
    Ok(0)
}

fn cmd_experiment(args: ExperimentArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let spec = ExperimentSpec::load(&args.spec)?;
    let report = run_experiment(&spec)?;
    write!(out, "{}", render_report(&report))?;
    if let Some(path) = &args.out {
        write_file(path, &(report.to_json() + "\n"))?;
    }
    if !report.is_available() {
        eprintln!("dataset unavailable; nothing was checked");
        return Ok(if args.assert { 3 } else { 0 });
    }
    Ok(if args.assert && !report.passed() { 1 } else { 0 })
}

/// Parses `args` and runs the command, writing results to `out`. Returns
/// the process exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let cfg = match &cli.config {
        Some(path) => match RunConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return 2;
            }
        },
        None => RunConfig::default(),
    };
    init_logging(cli.log_level.as_deref(), cfg.log_level.as_deref());
    let result = match cli.command {
        Command::Mine(a) => cmd_mine(a, cfg, out),
        Command::Check(a) => cmd_check(a, cfg, out),
        Command::Replay(a) => cmd_replay(a, cfg, out),
        Command::Report(a) => cmd_report(a, out),
        Command::Experiment(a) => cmd_experiment(a, out),
    };
    match result {
        Ok(code) => code,
        Err(CliError::Sink { error, .. } | CliError::Output(error)) if error.kind() == io::ErrorKind::BrokenPipe => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn help_names_every_parameter() {
        let help = Cli::command().render_long_help().to_string();
        for symbol in ["κ", "ω", "φ", "TSIZE"] {
            assert!(help.contains(symbol), "{symbol} missing from help");
        }
        let mut check = Cli::command();
        let check_help = check.find_subcommand_mut("check").unwrap().render_long_help().to_string();
        assert!(check_help.contains("TSIZE") && check_help.contains("φ"));
    }

    #[test]
    fn tick_parsing() {
        assert_eq!(parse_tick("per-event").unwrap(), TickPolicy::PerEvent);
        assert_eq!(parse_tick("30").unwrap(), TickPolicy::Periodic(30.0));
        assert_eq!(parse_tick("2.5s").unwrap(), TickPolicy::Periodic(2.5));
        assert!(parse_tick("often").is_err());
    }

    #[test]
    fn split_flags() {
        let s = SplitArgs { take_traces: None, split: Some(0.8) };
        assert_eq!(leading(&s, 10).unwrap(), Some(8));
        let s = SplitArgs { take_traces: Some(3), split: None };
        assert_eq!(leading(&s, 10).unwrap(), Some(3));
        let s = SplitArgs { take_traces: None, split: Some(1.5) };
        assert!(leading(&s, 10).is_err());
    }

    #[test]
    fn flags_override_config() {
        let args = Cli::try_parse_from(["tempograph", "check", "--tsize", "7", "--inclusive"]).unwrap();
        let Command::Check(args) = args.command else { panic!() };
        let base = CheckerConfig { tsize: 99, phi: 2.0, ..CheckerConfig::default() };
        let cfg = checker_config(&args, base).unwrap();
        assert_eq!((cfg.tsize, cfg.phi, cfg.inclusive_threshold), (7, 2.0, true));
    }

    #[test]
    fn run_config_json() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"model": "m.json", "miner": {"min_support": 200}, "checker": {"tsize": 5}, "outputs": {"report": "r.json"}}"#,
        )
        .unwrap();
        assert_eq!(cfg.miner.min_support, 200);
        assert_eq!(cfg.checker.tsize, 5);
        assert_eq!(cfg.checker.phi, 1.0);
    }
}
