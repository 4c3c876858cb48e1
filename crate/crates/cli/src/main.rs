//! `piecewise`: featurize ECG recordings into per-beat sequence matrices,
//! stream them, and score classifier output.

mod commands;
mod config;
mod input;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Environment variable holding the log filter (`error`, `warn`, `info`,
/// `debug`, or an env_logger spec).
const LOG_ENV: &str = "PIECEWISE_LOG";

#[derive(Parser, Debug)]
#[command(name = "piecewise", version, about = "Piece-wise ECG feature pipeline")]
struct Cli {
    /// TOML pipeline configuration; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Featurize every recording in a directory.
    Featurize(commands::featurize::Args),
    /// Featurize one recording sample by sample, emitting rows as they settle.
    Stream(commands::stream::Args),
    /// Score a predictions file against reference labels.
    Score(commands::score::Args),
    /// Dump lead choice, invalid regions and fiducials of one recording.
    Inspect(commands::inspect::Args),
    /// Plan folds, replication and z-score parameters for exported matrices.
    Prepare(commands::prepare::Args),
}

/// Failure classes with distinct exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration (exit 1).
    Usage(anyhow::Error),
    /// Unreadable, malformed or unusable data (exit 2).
    Data(anyhow::Error),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl From<piecewise_core::Error> for CliError {
    fn from(e: piecewise_core::Error) -> Self {
        use piecewise_core::Error as E;
        match e {
            E::Config(_) | E::Parameter(_) => CliError::Usage(e.into()),
            _ => CliError::Data(e.into()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn data_err(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Data(e.into())
}

pub fn usage_err(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Usage(e.into())
}

fn run(cli: Cli) -> CliResult<()> {
    let base = config::load(cli.config.as_deref())?;
    match cli.command {
        Command::Featurize(args) => commands::featurize::run(base, args),
        Command::Stream(args) => commands::stream::run(base, args),
        Command::Score(args) => commands::score::run(base, args),
        Command::Inspect(args) => commands::inspect::run(base, args),
        Command::Prepare(args) => commands::prepare::run(base, args),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (CliError::Usage(inner) | CliError::Data(inner)) = &e;
            eprintln!("error: {inner:#}");
            ExitCode::from(e.code())
        }
    }
}
