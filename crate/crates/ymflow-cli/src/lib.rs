//! Driver for the ymflow laboratory: config resolution, subcommands and
//! reproducible artifact output.

pub mod commands;
pub mod config;
pub mod output;

use std::path::Path;
use std::time::Instant;

use commands::Command;
use config::RunConfig;
use output::{write_run, Manifest};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Numerical(#[from] ymflow::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for anything the user can fix in the config, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

/// Runs `command` and writes its artifacts and manifest into `dir`.
pub fn run_to_dir(command: Command, cfg: &RunConfig, dir: &Path) -> Result<Manifest, CliError> {
    let start = Instant::now();
    let outcome = command.execute(cfg)?;
    write_run(dir, command.name(), cfg, outcome, start.elapsed().as_secs_f64())
}
