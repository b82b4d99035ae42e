//! Configuration, orchestration and CSV output for the `nonlocal` binary.
//!
//! Exit status contract: `0` all checks pass, `1` configuration error,
//! `2` a kernel axiom or run check failed, `3` the solver failed (the last
//! good snapshots are still written).

pub mod commands;
pub mod config;

use std::path::Path;

use thiserror::Error;

pub use commands::Status;
pub use config::{parse_config, ConfigError, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}", join(.0))]
    Config(Vec<ConfigError>),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] nonlocal_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn join(errors: &[ConfigError]) -> String {
    errors.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("\n")
}

impl CliError {
    pub fn status(&self) -> Status {
        match self {
            CliError::Config(_) | CliError::Usage(_) => Status::ConfigError,
            CliError::Core(_) => Status::ConfigError,
            CliError::Io(_) => Status::SolverFailed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Validate,
    Run,
    Compare,
    Converge,
}

/// Reads and parses a config file, applying a seed override.
pub fn load(path: &Path, seed: Option<u64>) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(vec![ConfigError { line: None, message: format!("{}: {e}", path.display()) }]))?;
    let config = parse_config(&text).map_err(CliError::Config)?;
    Ok(match seed {
        Some(s) => config.with_seed(s),
        None => config,
    })
}

pub fn execute(command: Command, config: &RunConfig, out: &Path) -> Result<Status, CliError> {
    for w in config.warnings() {
        eprintln!("warning: {w}");
    }
    match command {
        Command::Validate => commands::validate(config, out),
        Command::Run => commands::run(config, out),
        Command::Compare => commands::compare(config, out),
        Command::Converge => commands::converge(config, out),
    }
}
