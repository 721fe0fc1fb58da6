//! `ctwin`: batch estimation, simulation, oracle verification and ladder-graph
//! reports for multi-channel series.
//!
//! Exit codes: 0 success, 1 configuration or input error, 2 partial batch
//! failure, 3 verification tolerance exceeded.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{EstimateArgs, GraphArgs, SimulateArgs, VerifyArgs};

#[derive(Debug, Parser)]
#[command(
    name = "ctwin",
    version,
    about = "Causal factor estimation and ladder-graph analysis"
)]
struct Cli {
    /// TOML run configuration; command-line flags override its values
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate factors for each input file (directories are expanded)
    Estimate(EstimateArgs),
    /// Generate a synthetic series from a factors JSON
    Simulate(SimulateArgs),
    /// Compare the filter estimate against the least-squares oracle
    Verify(VerifyArgs),
    /// Render and analyze the ladder graph of a factors JSON
    Graph(GraphArgs),
}

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 1;
pub const EXIT_PARTIAL: u8 = 2;
pub const EXIT_TOLERANCE: u8 = 3;

/// A failure that ends the command with [`EXIT_INPUT`].
#[derive(Debug)]
pub struct CliError(pub String);

impl CliError {
    pub fn new(message: impl Into<String>) -> Self {
        CliError(message.into())
    }

    pub fn context(what: impl std::fmt::Display, err: impl std::fmt::Display) -> Self {
        CliError(format!("{what}: {err}"))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INPUT)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let settings = match cli.config.as_deref().map(config::ConfigFile::load).transpose() {
        Ok(file) => file.unwrap_or_default(),
        Err(e) => {
            eprintln!("error: {}", e.0);
            return ExitCode::from(EXIT_INPUT);
        }
    };
    let outcome = match &cli.command {
        Command::Estimate(args) => commands::estimate(args, &settings),
        Command::Simulate(args) => commands::simulate(args, &settings),
        Command::Verify(args) => commands::verify(args, &settings),
        Command::Graph(args) => commands::graph(args, &settings),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.0);
            ExitCode::from(EXIT_INPUT)
        }
    }
}
