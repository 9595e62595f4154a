use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use phaseret_cli::commands;
use phaseret_cli::config::{Algorithm, ExperimentConfig};

#[derive(Parser)]
#[command(name = "phaseret", version, about = "Multi-plane phase retrieval experiments")]
struct Cli {
    /// Experiment configuration file (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overrides `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Noise seed, overrides `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Algorithm for `reconstruct`, overrides `algorithm`.
    #[arg(long, global = true)]
    algorithm: Option<Algorithm>,
    /// Ground-truth field used for error metrics and phase alignment.
    #[arg(long, global = true)]
    truth: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate noisy multi-plane intensities of the configured object.
    Simulate,
    /// Reconstruct the object from an observation file.
    Reconstruct { observations: PathBuf },
    /// Run SBMIR-FB, AL and AL + D-AL on the same observations.
    Compare { observations: PathBuf },
    /// Write amplitude and phase PGM images of a field file.
    Render { field: PathBuf },
    /// Print the effective configuration.
    Config,
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = cli.out {
        cfg.output_dir = out;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(algorithm) = cli.algorithm {
        cfg.algorithm = algorithm;
    }
    let out = cfg.output_dir.clone();
    let truth = cli.truth.as_deref();
    match cli.command {
        Command::Simulate => commands::simulate(&cfg, &out),
        Command::Reconstruct { observations } => commands::reconstruct(&cfg, cfg.algorithm, &observations, truth, &out),
        Command::Compare { observations } => commands::compare(&cfg, &observations, truth, &out),
        Command::Render { field } => commands::render(&field, truth, &out),
        Command::Config => {
            print!("{}", cfg.to_text());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
