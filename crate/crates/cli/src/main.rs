//! `pmuclass` — command-line pipeline for classifying PMU power-system
//! disturbance records into Attack / Natural / NoEvent.
//!
//! Subcommands run the stages end to end over one JSON run configuration:
//! `ingest` (load, merge, sample), `preprocess` (non-finite removal,
//! isolation-forest outlier filtering, PCA projection data), `analyze`
//! (feature scores, histograms), `evaluate` (cross-validated model
//! comparison with and without feature selection), `tune` (random-forest
//! grid search), `predict` (score new CSVs with a saved artifact) and
//! `synth` (seeded synthetic data for trying the pipeline out).

mod commands;
mod context;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::context::{CliError, Phase, RunContext};

#[derive(Parser)]
#[command(
    name = "pmuclass",
    version,
    about = "PMU disturbance classification pipeline"
)]
struct Cli {
    /// Run configuration (JSON). Required by every subcommand except
    /// `predict` and `synth`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the configured output directory (the PMUCLASS_OUT_DIR
    /// environment variable does the same).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Cap worker threads. Results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load and merge the input CSVs, draw the working sample.
    Ingest,
    /// Drop non-finite rows, remove isolation-forest outliers, emit PCA
    /// projection data.
    Preprocess,
    /// Rank features by correlation and mutual information; emit histogram
    /// data.
    Analyze,
    /// Cross-validate the configured models, with and without feature
    /// selection; save the best model artifact.
    Evaluate,
    /// Grid-search random-forest hyperparameters.
    Tune,
    /// Score a CSV with a saved model artifact.
    Predict {
        /// Model artifact written by `evaluate`.
        #[arg(long)]
        model: PathBuf,
        /// Input CSV (same schema as training data).
        #[arg(long)]
        input: PathBuf,
        /// Output path (default: predictions.csv in the working directory).
        #[arg(long, default_value = "predictions.csv")]
        output: PathBuf,
    },
    /// Generate a seeded synthetic dataset shaped like the real captures.
    Synth {
        #[arg(long, default_value_t = 2000)]
        rows: usize,
        #[arg(long, default_value_t = 15)]
        files: usize,
        #[arg(long, default_value_t = 32)]
        features: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Fraction of rows given one non-finite cell.
        #[arg(long, default_value_t = 0.01)]
        nonfinite: f64,
        /// Distance between class centres, in noise standard deviations.
        #[arg(long, default_value_t = 2.5)]
        separation: f64,
        /// Directory to write the capture files into.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    if let Some(threads) = cli.threads {
        // Ignore the error if a pool already exists; results are identical
        // under any thread count anyway.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }

    let result = match &cli.command {
        Command::Ingest => with_context(&cli, Phase::Ingest, commands::ingest::run),
        Command::Preprocess => with_context(&cli, Phase::Preprocess, commands::preprocess::run),
        Command::Analyze => with_context(&cli, Phase::Analyze, commands::analyze::run),
        Command::Evaluate => with_context(&cli, Phase::Evaluate, commands::evaluate::run),
        Command::Tune => with_context(&cli, Phase::Tune, commands::tune::run),
        Command::Predict {
            model,
            input,
            output,
        } => commands::predict::run(model, input, output).map_err(|error| CliError {
            phase: Phase::Predict,
            error,
        }),
        Command::Synth {
            rows,
            files,
            features,
            seed,
            nonfinite,
            separation,
            out,
        } => commands::synth::run(
            *rows,
            *files,
            *features,
            *seed,
            *nonfinite,
            *separation,
            out,
        )
        .map_err(|error| CliError {
            phase: Phase::Synth,
            error,
        }),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("pmuclass: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn with_context(
    cli: &Cli,
    phase: Phase,
    run: fn(&RunContext) -> Result<(), pmuclass_core::Error>,
) -> Result<(), CliError> {
    let ctx = RunContext::new(cli.config.as_deref(), cli.seed, cli.out_dir.clone(), phase)?;
    run(&ctx).map_err(|error| CliError { phase, error })
}
