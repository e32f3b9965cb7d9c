//! Command-line driver for `oedkit`: config resolution, CSV ingestion and
//! emission, and the `simulate | estimate | design | scan | verify` subcommands.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod lock;
pub mod table;

use std::path::PathBuf;

pub use args::{Cli, Command};
pub use config::RunConfig;
pub use error::{CliError, CliResult};

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "OEDKIT_THREADS";

/// Parse the thread cap; unset or empty means no cap.
pub fn thread_cap(value: Option<&str>) -> CliResult<Option<usize>> {
    match value.map(str::trim) {
        None | Some("") => Ok(None),
        Some(s) => match s.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Invalid(format!(
                "{THREADS_ENV} must be a positive integer, got '{s}'"
            ))),
        },
    }
}

/// Resolve the configuration, lock the output directory and run one subcommand.
pub fn run(command: &Command) -> CliResult<Vec<PathBuf>> {
    let cfg = RunConfig::resolve(command.overrides())?;
    let _lock = lock::OutputLock::acquire(&cfg.out)?;
    match command {
        Command::Simulate(_) => commands::simulate(&cfg),
        Command::Estimate(_) => commands::estimate(&cfg),
        Command::Design(_) => commands::design(&cfg),
        Command::Scan(_) => commands::scan(&cfg),
        Command::Verify(_) => commands::verify(&cfg),
    }
}
