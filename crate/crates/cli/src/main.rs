//! sabench — sensitivity-analysis benchmark engine for sliding-window
//! time-series forecasters.
//!
//! Exit codes: 0 = success, 1 = fatal configuration or I/O error,
//! 2 = the grid ran but some cells failed.

mod commands;
mod config;
mod fsutil;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Parser)]
#[command(name = "sabench", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic panel CSV plus its planted ground-truth ranking.
    Synth {
        #[arg(long)]
        config: PathBuf,
        /// Output directory for panel.csv and ground_truth.json.
        #[arg(long)]
        out: PathBuf,
        /// Override the config's global seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train the built-in models of a config and save them under models/.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Execute the full (model x method) grid into a run directory.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Run directory; receives reports/ and manifest.json.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for grid cells (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Summarize a run directory into agreement matrices and accuracy tables.
    Report {
        /// Run directory produced by `sabench run`.
        run_dir: PathBuf,
        /// Ground-truth ranking JSON ({"features": [...], "ranks": [...]}).
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Flip the truth ranking (for sources ranked in the opposite
        /// direction).
        #[arg(long)]
        invert_truth: bool,
        /// Where to write matrices/ (default: the run directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve a saved model (or an echo predictor) over the adapter protocol
    /// on stdin/stdout.
    Serve(commands::serve::ServeArgs),
}

fn load_config(path: &PathBuf, seed: Option<u64>) -> anyhow::Result<RunConfig> {
    let mut config = RunConfig::load(path)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    Ok(config)
}

fn dispatch(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Synth { config, out, seed } => {
            let config = load_config(&config, seed)?;
            commands::synth::cmd_synth(&config, &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Train { config, out, seed } => {
            let config = load_config(&config, seed)?;
            commands::train::cmd_train(&config, &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Run {
            config,
            out,
            seed,
            jobs,
        } => {
            let config = load_config(&config, seed)?;
            let jobs = jobs
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
                .max(1);
            let outcome = commands::run::cmd_run(&config, &out, jobs)?;
            if outcome.failed_cells > 0 {
                Ok(ExitCode::from(2))
            } else {
                Ok(ExitCode::SUCCESS)
            }
        }
        Command::Report {
            run_dir,
            truth,
            invert_truth,
            out,
        } => {
            commands::report::cmd_report(
                &run_dir,
                truth.as_deref(),
                invert_truth,
                out.as_deref(),
            )?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Serve(args) => {
            commands::serve::cmd_serve(&args)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
