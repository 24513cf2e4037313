//! `fdm`: generate data, train, sample, optimize schemes and evaluate.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "fdm", version, about = "Flexible diffusion over frame sequences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every subcommand.
#[derive(Debug, Args)]
pub struct Common {
    /// Key-value settings file; flags take precedence over it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a setting, e.g. `--set lr=0.0005`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset (town-drive or colored-rooms).
    GenData(commands::data::GenDataArgs),
    /// Train a denoiser, resuming from an existing checkpoint in --out.
    Train(commands::train::TrainArgs),
    /// Complete videos under a sampling scheme.
    Sample(commands::sample::SampleArgs),
    /// Greedily choose observed frames for a scheme's latent stages.
    OptimizeScheme(commands::sample::OptimizeArgs),
    /// Score completed videos against reference data.
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Validate a scheme and render it as SVG.
    InspectScheme(commands::inspect::InspectSchemeArgs),
    /// Draw tasks from a training task distribution and summarize them.
    InspectTaskdist(commands::inspect::InspectTaskdistArgs),
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(raw) = std::env::var("FDM_THREADS") {
        let n: usize = raw
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Usage(format!("FDM_THREADS must be a positive integer, got {raw:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::GenData(a) => commands::data::run(a),
        Command::Train(a) => commands::train::run(a),
        Command::Sample(a) => commands::sample::run_sample(a),
        Command::OptimizeScheme(a) => commands::sample::run_optimize(a),
        Command::Evaluate(a) => commands::evaluate::run(a),
        Command::InspectScheme(a) => commands::inspect::run_scheme(a),
        Command::InspectTaskdist(a) => commands::inspect::run_taskdist(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fdm: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
