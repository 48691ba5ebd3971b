//! `photonstat` command-line front end.
//!
//! Exit codes: 0 success, 2 argument error, 3 data, format or I/O error,
//! 4 calibration or statistics error.

mod commands;
mod manifest;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use photonstat::events::{TraceFormat, DEFAULT_THRESHOLD_HIGH, DEFAULT_THRESHOLD_LOW};
use photonstat::stats::{WindowMode, DEFAULT_TARGET_MEAN};
use photonstat::ErrorKind;

pub const EXIT_ARGUMENT: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_STATISTICS: u8 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn argument(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_ARGUMENT,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Self::data(format!("I/O error on {}: {err}", path.display()))
    }
}

impl From<photonstat::Error> for CliError {
    fn from(err: photonstat::Error) -> Self {
        let code = match err.kind() {
            ErrorKind::Argument => EXIT_ARGUMENT,
            ErrorKind::Data => EXIT_DATA,
            ErrorKind::Statistics => EXIT_STATISTICS,
        };
        Self {
            code,
            message: err.to_string(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlotFormat {
    /// Histogram CSV only.
    Csv,
    /// Histogram CSV plus a standalone SVG bar chart.
    Svg,
}

#[derive(Debug, Parser)]
#[command(
    name = "photonstat",
    version,
    about = "Photon-counting statistics from detector traces"
)]
pub struct Cli {
    /// Base RNG seed for `simulate`; overrides `rng_seed` in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads. Results do not depend on this value.
    #[arg(long, global = true, env = "PHOTONSTAT_THREADS", value_parser = clap::value_parser!(u32).range(1..))]
    pub threads: Option<u32>,

    /// Histogram output format.
    #[arg(long, global = true, value_enum, default_value_t = PlotFormat::Csv)]
    pub format: PlotFormat,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate simulated event files from a source config.
    Simulate(SimulateArgs),
    /// Convert an analog trace into an event file.
    Digitize(DigitizeArgs),
    /// Keep signal events that have an idler partner within the window.
    Herald(HeraldArgs),
    /// Calibrate bins, histogram and compute Q over one or more iterations.
    Stats(StatsArgs),
    /// Summarize Q reports and verify run manifests.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Source config file (`key = value` lines).
    #[arg(long)]
    pub config: PathBuf,
    /// Output prefix; files are named `<prefix>.iterNN.*`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub iterations: u32,
    /// Also write each event series as a RAWF32 TTL trace.
    #[arg(long)]
    pub emit_trace: bool,
    /// Pulse width in samples for `--emit-trace`.
    #[arg(long, default_value_t = 10)]
    pub pulse_width: usize,
    /// Pulse amplitude in volts for `--emit-trace`.
    #[arg(long, default_value_t = 3.3)]
    pub pulse_amplitude: f32,
}

#[derive(Debug, Args)]
pub struct DigitizeArgs {
    /// Trace file (CSV or RAWF32).
    pub trace: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Rising threshold in volts.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD_HIGH)]
    pub threshold_high: f64,
    /// Re-arm threshold in volts.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD_LOW)]
    pub threshold_low: f64,
    /// Use one level for both thresholds (no hysteresis).
    #[arg(long, conflicts_with_all = ["threshold_high", "threshold_low"])]
    pub single_threshold: Option<f64>,
    /// Trace format; detected from the file header when omitted.
    #[arg(long)]
    pub trace_format: Option<TraceFormat>,
    /// Non-paralyzable dead time in seconds applied after digitization.
    #[arg(long)]
    pub dead_time: Option<f64>,
}

#[derive(Debug, Args)]
pub struct HeraldArgs {
    #[arg(long)]
    pub signal: PathBuf,
    #[arg(long)]
    pub idler: PathBuf,
    /// Coincidence window in slots.
    #[arg(long, default_value_t = 1)]
    pub window: usize,
    #[arg(long, default_value_t = WindowMode::Symmetric)]
    pub window_mode: WindowMode,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Event files, one per iteration (signal arm when heralding).
    #[arg(required = true)]
    pub events: Vec<PathBuf>,
    /// Idler event files paired with `events` in order.
    #[arg(long, num_args = 1..)]
    pub herald: Vec<PathBuf>,
    /// Coincidence window in slots.
    #[arg(long, default_value_t = 1)]
    pub window: usize,
    #[arg(long, default_value_t = WindowMode::Symmetric)]
    pub window_mode: WindowMode,
    /// Mean count per bin the bin width is calibrated to.
    #[arg(long, default_value_t = DEFAULT_TARGET_MEAN)]
    pub target_mean: f64,
    /// Output prefix for histograms, the Q report and the manifest.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(arg_required_else_help = true)]
pub struct ReportArgs {
    /// Q report files to summarize.
    pub reports: Vec<PathBuf>,
    /// Manifests whose recorded digests are checked against the files on disk.
    #[arg(long, num_args = 1..)]
    pub verify: Vec<PathBuf>,
}

/// `<prefix><suffix>` without treating the prefix's own dots as an extension.
pub fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build_global()
            .map_err(|e| CliError::argument(format!("cannot start {n} worker threads: {e}")))?;
    }
    match &cli.command {
        Command::Simulate(args) => commands::simulate(&cli, args),
        Command::Digitize(args) => commands::digitize(args),
        Command::Herald(args) => commands::herald(args),
        Command::Stats(args) => commands::stats(&cli, args),
        Command::Report(args) => commands::report(args),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("photonstat: {e}");
            ExitCode::from(e.code)
        }
    }
}
