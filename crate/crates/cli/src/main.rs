//! `tsforge`: generate, evaluate, augment and embed time-series datasets.
//!
//! Exit codes: 0 success, 2 user or input error, 3 numeric failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod augment;
mod embed;
mod eval;
mod gen;

#[derive(Parser)]
#[command(name = "tsforge", version, about = "Synthetic time-series generation and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a generator to source data (or sample a simulator) and write synthetic series.
    Gen(gen::GenArgs),
    /// Score synthetic data against real data and write a metric report.
    Eval(eval::EvalArgs),
    /// Append augmented series to a dataset.
    Augment(augment::AugmentArgs),
    /// 2-D embedding of real and synthetic series.
    Embed(embed::EmbedArgs),
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(tsforge::Error),
}

impl From<tsforge::Error> for CliError {
    fn from(e: tsforge::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numeric() => 3,
            _ => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

/// Writes `text` to `path`, mapping failures to input errors.
pub fn write_text(path: &PathBuf, text: &str) -> CliResult {
    std::fs::write(path, text).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

/// Parses a comma-separated list.
pub fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> CliResult<Vec<T>> {
    s.split(',')
        .map(|p| p.trim().parse::<T>().map_err(|_| CliError::Usage(format!("bad {what} entry {p:?} in {s:?}"))))
        .collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => gen::run(a),
        Command::Eval(a) => eval::run(a),
        Command::Augment(a) => augment::run(a),
        Command::Embed(a) => embed::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
