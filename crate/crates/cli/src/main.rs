mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{RaytraceArgs, SweepAxis};
use crate::config::{parse_shape, RunArgs};
use crate::error::CliResult;

#[derive(Debug, Parser)]
#[command(name = "mapnet", version, about = "Neural Monge-Ampere solver for reflector design")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one network per seed and write run CSVs, checkpoints and error maps
    Solve {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Train across values of one hyperparameter and summarize over seeds
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// n_interior, n_boundary, depth, width or optimizer
        #[arg(long)]
        axis: String,
        /// Comma-separated axis values
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
    /// Ray trace a checkpoint and compare against the target image
    Raytrace {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Defaults to the problem recorded next to the checkpoint
        #[arg(long)]
        problem: Option<String>,
        #[arg(long, default_value_t = 1_000_000)]
        n_rays: usize,
        /// ROWSxCOLS or N
        #[arg(long, default_value = "100x100")]
        bins: String,
        #[arg(long, default_value_t = 4)]
        supersample: usize,
        /// Full-resolution evaluation: 1e8 rays on 250x250 bins
        #[arg(long)]
        full_scale: bool,
        #[arg(long, alias = "out")]
        output_dir: Option<PathBuf>,
    },
    /// Aggregate summary CSVs into one table per problem
    Report {
        /// Directory searched recursively for summary.csv files
        dir: PathBuf,
        /// Output CSV (default: DIR/report.csv)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the effective configuration as TOML
    Config {
        #[command(flatten)]
        run: RunArgs,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Solve { run } => {
            let cfg = run.resolve(&[0])?;
            commands::solve(&cfg)?;
        }
        Command::Sweep { run, axis, values } => {
            let axis: SweepAxis = axis.parse()?;
            let seeds: Vec<u64> = (0..10).collect();
            let cfg = run.resolve(&seeds)?;
            commands::sweep(&cfg, axis, &values)?;
        }
        Command::Raytrace {
            checkpoint,
            problem,
            n_rays,
            bins,
            supersample,
            full_scale,
            output_dir,
        } => {
            let (n_rays, bins) = if full_scale {
                (100_000_000, [250, 250])
            } else {
                (n_rays, parse_shape(&bins)?)
            };
            commands::raytrace(&RaytraceArgs {
                checkpoint,
                problem,
                n_rays,
                bins,
                supersample,
                output_dir,
            })?;
        }
        Command::Report { dir, out } => {
            commands::report(&dir, out.as_deref())?;
        }
        Command::Config { run } => {
            let cfg = run.resolve(&[0])?;
            print!("{}", config::to_toml(&cfg)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
