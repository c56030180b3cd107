//! Command-line pipeline for two-app popularity-contest prediction.
//!
//! Five batch stages share one JSON config (flags win on conflict):
//! `synth` writes deterministic synthetic record streams, `featurize`
//! turns streams into a feature matrix and labels, `train` fits the
//! forests, `evaluate` runs the rolling backtest with ablations, and
//! `report` condenses everything into summary tables.

mod config;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use config::{Overrides, PipelineConfig};
use stages::Stage;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),
    #[error("config field {field}: {message}")]
    Config { field: String, message: String },
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::MissingFile(_) | CliError::Config { .. } => 2,
            CliError::Internal(_) => 1,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "rivalcast",
    about = "Predict the weekly popularity contest between two rival apps",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Pipeline configuration file (JSON).
    #[arg(long, global = true, default_value = "config.json")]
    config: PathBuf,

    /// Override the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the feature subset, e.g. "CF,FF" or "AF".
    #[arg(long, global = true, value_delimiter = ',')]
    subset: Option<Vec<String>>,

    /// Override the rolling training window length.
    #[arg(long, global = true)]
    train_weeks: Option<usize>,

    /// Override the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Make any input validation error fatal.
    #[arg(long, global = true)]
    strict: bool,

    /// Fine-feature basis: "daily" or "trailing:L".
    #[arg(long, global = true)]
    fine_basis: Option<String>,

    /// Worker threads for forest training (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic record streams plus ground truth.
    Synth,
    /// Extract the feature matrix and contest labels from the streams.
    Featurize,
    /// Fit the classifier and regressor forests on all windows.
    Train,
    /// Rolling-origin backtest with feature-subset ablations.
    Evaluate,
    /// Summarize evaluation results and the weekly downloads series.
    Report,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let overrides = Overrides {
        seed: cli.seed,
        subset: cli.subset.clone(),
        train_weeks: cli.train_weeks,
        out_dir: cli.out.clone(),
        strict: cli.strict,
        fine_basis: cli.fine_basis.clone(),
        threads: cli.threads,
    };
    let config = PipelineConfig::load(&cli.config, &overrides)?;

    if let Some(threads) = config.threads {
        // Ignore the error when a pool already exists; thread count never
        // changes results, only wall time.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }

    let stage = Stage::new(&config);
    match cli.command {
        Command::Synth => stage.synth(),
        Command::Featurize => stage.featurize(),
        Command::Train => stage.train(),
        Command::Evaluate => stage.evaluate(),
        Command::Report => stage.report(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(error.exit_code())
        }
    }
}
