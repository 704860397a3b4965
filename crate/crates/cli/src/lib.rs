//! Command-line entry points: training, evaluation, prediction,
//! interpretation, synthetic data generation and grid search.
//!
//! Exit codes are a stable contract: 0 success, 2 input error, 3 numerical
//! failure. Anything else (1) indicates an internal error.

mod commands;
mod manifest;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use shine_core::model::Mode;
use thiserror::Error;

pub use commands::{
    cmd_evaluate, cmd_grid_search, cmd_interpret, cmd_make_synthetic, cmd_predict, cmd_train,
    EvaluateOutcome, TrainOutcome, CHECKPOINT_FILE, CORRELATION_FILE, ENRICHMENT_FILE, GMT_FILE,
    GRID_FILE, MANIFEST_FILE, METRICS_FILE, SPLIT_FILE, SUBGRAPHS_FILE,
};
pub use manifest::{sha256_hex, FileDigest, RunManifest, RunStatus};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "shine", version, about = "Hypergraph subgraph classification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and write checkpoint, metrics and run manifest.
    Train(TrainArgs),
    /// Report micro-F1 of a checkpoint on one split.
    Evaluate(EvaluateArgs),
    /// Score subjects with a checkpoint.
    Predict(PredictArgs),
    /// Rank hyperedges per class by attention and correlate hyperedges.
    Interpret(InterpretArgs),
    /// Generate a planted-pathway dataset.
    MakeSynthetic(SyntheticArgs),
    /// Train every point of a hyperparameter grid under several seeds.
    GridSearch(GridArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Gene set collection (GMT).
    #[arg(long)]
    pub gmt: PathBuf,
    /// Labeled subjects: `id TAB labels TAB gene[:weight],...`.
    #[arg(long)]
    pub subgraphs: PathBuf,
    /// Split assignment file: `id TAB train|val|test`.
    #[arg(
        long,
        conflicts_with = "split_ratios",
        required_unless_present = "split_ratios"
    )]
    pub split: Option<PathBuf>,
    /// Stratified train,val,test ratios, e.g. 0.6,0.2,0.2.
    #[arg(long, value_parser = parse_ratios)]
    pub split_ratios: Option<[f64; 3]>,
    /// Training configuration (TOML); unset keys keep their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the configured mode.
    #[arg(long)]
    pub mode: Option<Mode>,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, env = "SHINE_OUT_DIR", default_value = "shine-out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub subgraphs: PathBuf,
    #[arg(long)]
    pub split: PathBuf,
    /// train, val or test.
    #[arg(long, default_value = "test")]
    pub split_name: String,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Subjects to score; the label column is ignored.
    #[arg(long)]
    pub subgraphs: PathBuf,
    /// Write the TSV here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct InterpretArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Labeled subjects whose attention is aggregated per class.
    #[arg(long)]
    pub subgraphs: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub top_k: usize,
    #[arg(long, env = "SHINE_OUT_DIR", default_value = "shine-out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SyntheticArgs {
    #[arg(long, default_value_t = 200)]
    pub nodes: usize,
    #[arg(long, default_value_t = 20)]
    pub edges: usize,
    #[arg(long, default_value_t = 4)]
    pub classes: usize,
    #[arg(long, default_value_t = 400)]
    pub subjects: usize,
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, env = "SHINE_OUT_DIR", default_value = "shine-out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Candidate values per hyperparameter (TOML lists).
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Comma-separated training seeds.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub seeds: Vec<u64>,
    /// Parallel training workers.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, env = "SHINE_OUT_DIR", default_value = "shine-out")]
    pub out: PathBuf,
}

fn parse_ratios(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated ratios, got {s:?}"));
    }
    let mut out = [0.0; 3];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.parse().map_err(|_| format!("invalid ratio {p:?}"))?;
    }
    Ok(out)
}

/// Runs one parsed command line, printing results to standard output and
/// errors to standard error. Returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let mut stdout = std::io::stdout().lock();
    let result = match &cli.command {
        Command::Train(a) => cmd_train(a, &mut stdout).map(|_| ()),
        Command::Evaluate(a) => cmd_evaluate(a, &mut stdout).map(|_| ()),
        Command::Predict(a) => cmd_predict(a, &mut stdout),
        Command::Interpret(a) => cmd_interpret(a, &mut stdout),
        Command::MakeSynthetic(a) => cmd_make_synthetic(a, &mut stdout).map(|_| ()),
        Command::GridSearch(a) => cmd_grid_search(a, &mut stdout).map(|_| ()),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
