use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use urbannav::harness::output::{DEFAULT_BIN_WIDTH_M, DEFAULT_TARGET_RATE};
use urbannav_cli::commands::{cmd_report, cmd_sweep, cmd_trial, ReportArgs, SweepArgs, TrialArgs};

#[derive(Parser)]
#[command(name = "urbannav", version, about = "Limited-information urban navigation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trial and print its outcome.
    Trial {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Write estimator and decision logs.
        #[arg(long)]
        trace: bool,
        /// Directory for trace files.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run a Monte Carlo sweep and write CSV artifacts.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Trials per cell, overriding the config.
        #[arg(long)]
        trials: Option<usize>,
        /// Base seed, overriding the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Summarize a results.csv file.
    Report {
        results: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TARGET_RATE)]
        target_rate: f64,
        #[arg(long, default_value_t = DEFAULT_BIN_WIDTH_M)]
        bin_width: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Trial { config, seed, trace, out } => cmd_trial(&TrialArgs { config, seed, trace, out }),
        Command::Sweep {
            config,
            trials,
            seed,
            out,
            workers,
        } => cmd_sweep(&SweepArgs {
            config,
            trials,
            seed,
            out,
            workers,
        }),
        Command::Report {
            results,
            target_rate,
            bin_width,
        } => cmd_report(&ReportArgs {
            results,
            target_rate,
            bin_width_m: bin_width,
        }),
    };
    match outcome {
        Ok(text) => {
            println!("{}", text.trim_end());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("urbannav: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
