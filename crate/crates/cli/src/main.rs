//! `svd-ifa`: estimate, diagnose and benchmark exploratory item factor
//! analysis from response matrices stored as CSV.
//!
//! Exit codes: 0 success, 2 unreadable or malformed input, 3 invalid
//! configuration (including bad flags), 4 numerical failure.

mod commands;
mod error;
mod io;
mod manifest;
mod svg;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use commands::{bench, estimate, evaluate, scree, simulate};
use error::EXIT_CONFIG;

#[derive(Debug, Parser)]
#[command(name = "svd-ifa", version, about = "Two-stage SVD estimation for exploratory item factor analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate loadings, scores and intercepts from a response matrix
    Estimate(estimate::EstimateArgs),
    /// Singular-value scree diagnostic for choosing the number of factors
    Scree(scree::ScreeArgs),
    /// Simulate a response matrix with known parameters
    Simulate(simulate::SimulateArgs),
    /// Replicated simulation study over a scenario grid
    Bench(bench::BenchArgs),
    /// Alignment loss between reference and estimated loadings
    Evaluate(evaluate::EvaluateArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_CONFIG),
            };
        }
    };
    let result = match &cli.command {
        Command::Estimate(args) => estimate::run(args),
        Command::Scree(args) => scree::run(args),
        Command::Simulate(args) => simulate::run(args),
        Command::Bench(args) => bench::run(args),
        Command::Evaluate(args) => evaluate::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.code)
        }
    }
}
