//! `drxp`: compute, verify and enumerate distance-restricted explanations.

mod bench;
mod explain;

use std::fmt;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "drxp", version, about = "Distance-restricted abductive and contrastive explanations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute (or enumerate) explanations for one instance.
    Explain(explain::ExplainArgs),
    /// Compare extraction algorithms over a synthetic spec or a case directory.
    Bench(bench::BenchArgs),
}

/// Oracle command launched instead of the built-in grid search.
pub const ORACLE_ENV: &str = "DRXP_ORACLE_CMD";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(drxp::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => f.write_str(msg),
            CliError::Core(err) => err.fmt(f),
        }
    }
}

impl From<drxp::Error> for CliError {
    fn from(err: drxp::Error) -> Self {
        CliError::Core(err)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use drxp::Error::*;
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(NoExplanation) => 1,
            CliError::Core(
                OracleFailure(_) | Cancelled | OracleInconsistency(_) | CombinatorialLimit { .. } | Unsupported(_),
            ) => 3,
            CliError::Core(_) => 2,
        }
    }
}

pub fn read_file(path: &std::path::Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Explain(args) => explain::run(args),
        Command::Bench(args) => bench::run(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("drxp: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
