//! Command-line front end for napforge.
//!
//! Every subcommand is also callable as a function so that tests and other
//! programs can drive the same code paths as the binary.

pub mod commands;
pub mod config;
pub mod error;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use napforge::featurize::{GridRule, Pipeline};
use napforge::hdbscan::Selection;
use napforge::metric::Metric;

pub use commands::{cmd_dbcv, cmd_export, cmd_ood, cmd_run, cmd_sweep, cmd_synth};
pub use config::RunConfig;
pub use error::{CliError, ErrorClass};

/// Fixed file names inside a run directory.
pub mod files {
    pub const MODEL: &str = "model.json";
    pub const LABELS: &str = "labels.csv";
    pub const SUMMARY: &str = "summary.txt";
    pub const DBCV: &str = "dbcv.json";
    pub const DBCV_TEXT: &str = "dbcv.txt";
    pub const SWEEP: &str = "sweep.csv";
    pub const OOD: &str = "ood.json";
    pub const OOD_ID: &str = "ood_id.csv";
    pub const OOD_OOD: &str = "ood_ood.csv";
    pub const FEATURES: &str = "features.napf";
    pub const CONFIG: &str = "config.json";
    pub const EXPORT: &str = "export.csv";
    pub const ACTIVATIONS: &str = "activations.napac";
    pub const METADATA: &str = "metadata.csv";
}

#[derive(Debug, Parser)]
#[command(name = "napforge", version, about = "Cluster neural activation distributions into layer-level concepts")]
pub struct Cli {
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true, env = "NAPFORGE_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic activation set and its metadata.
    Synth(SynthArgs),
    /// Featurize, cluster and summarize one activation set.
    Run(RunArgs),
    /// Predict in- and out-of-distribution sets against a fitted run.
    Ood(OodArgs),
    /// Fit one model per cell of a parameter grid.
    Sweep(SweepArgs),
    /// Compute DBCV for a fitted run.
    Dbcv(DbcvArgs),
    /// Write features, labels and metadata of a run as one CSV.
    Export(ExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Blobs,
    Manifold,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// JSON synth spec; flags are ignored when given.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "blobs")]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 4)]
    pub channels: usize,
    #[arg(long, default_value_t = 64)]
    pub spatial: usize,
    /// Number of blobs, placed at `offset + k * gap` on every channel.
    #[arg(long)]
    pub centers: Option<usize>,
    #[arg(long)]
    pub gap: Option<f64>,
    #[arg(long)]
    pub offset: Option<f64>,
    /// Per-channel scale of each blob's spatial profile.
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub latent_lo: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub latent_hi: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub layer: Option<String>,
    /// Directory receiving activations.napac and metadata.csv.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args, Default)]
pub struct RunArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub activations: Option<PathBuf>,
    #[arg(long)]
    pub metadata: Option<PathBuf>,
    /// Run directory.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_parser = parse_pipeline)]
    pub pipeline: Option<Pipeline>,
    #[arg(long, value_parser = parse_metric)]
    pub metric: Option<Metric>,
    #[arg(long)]
    pub min_cluster_size: Option<usize>,
    #[arg(long)]
    pub min_samples: Option<usize>,
    #[arg(long, value_parser = parse_selection)]
    pub selection: Option<Selection>,
    #[arg(long)]
    pub mass_percent: Option<f64>,
    #[arg(long)]
    pub grid_points: Option<usize>,
    #[arg(long, value_parser = parse_grid_rule)]
    pub grid_rule: Option<GridRule>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write dbcv.json.
    #[arg(long)]
    pub dbcv: bool,
}

#[derive(Debug, Clone, Args)]
pub struct OodArgs {
    /// Run directory holding model.json and features.napf.
    #[arg(long)]
    pub run: PathBuf,
    /// In-distribution activations.
    #[arg(long)]
    pub id: PathBuf,
    /// Out-of-distribution activations.
    #[arg(long)]
    pub ood: PathBuf,
    /// Defaults to the run directory.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub base: RunArgs,
    /// Comma-separated pipelines; the configured pipeline when absent.
    #[arg(long, value_delimiter = ',', value_parser = parse_pipeline)]
    pub pipelines: Vec<Pipeline>,
    #[arg(long, value_delimiter = ',', value_parser = parse_selection, default_value = "eom,leaf")]
    pub selections: Vec<Selection>,
    /// Comma-separated minimum cluster sizes.
    #[arg(long, value_delimiter = ',', default_value = "3,5,7,9,11,13,15,17,19")]
    pub min_cluster_sizes: Vec<usize>,
    /// Comma-separated nested dataset sizes; the full set when absent.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Vec<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct DbcvArgs {
    #[arg(long)]
    pub run: PathBuf,
    /// Defaults to the run directory.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub run: PathBuf,
    /// Metadata CSV; the one recorded in the run configuration when absent.
    #[arg(long)]
    pub metadata: Option<PathBuf>,
    /// Defaults to export.csv in the run directory.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn parse_pipeline(s: &str) -> Result<Pipeline, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_selection(s: &str) -> Result<Selection, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_grid_rule(s: &str) -> Result<GridRule, String> {
    match s {
        "endpoints" => Ok(GridRule::Endpoints),
        "decile" => Ok(GridRule::Decile),
        other => Err(format!("unknown grid rule {other:?}")),
    }
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::config("threads", "--threads must be at least 1"));
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    match cli.command {
        Command::Synth(a) => cmd_synth(&a),
        Command::Run(a) => cmd_run(&a).map(|_| ()),
        Command::Ood(a) => cmd_ood(&a).map(|_| ()),
        Command::Sweep(a) => cmd_sweep(&a).map(|_| ()),
        Command::Dbcv(a) => {
            let report = cmd_dbcv(&a)?;
            print!("{}", report.to_text());
            Ok(())
        }
        Command::Export(a) => cmd_export(&a),
    }
}

/// Parses `args` (program name first) and runs the command. Usage errors
/// are reported as configuration errors.
pub fn run_from<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::config("arguments", e.to_string()))?;
    run(cli)
}
