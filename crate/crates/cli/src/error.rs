use std::path::PathBuf;

use oedkit::OedError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("missing {flag}: {hint}")]
    Missing { flag: &'static str, hint: &'static str },
    #[error("{path}: {message}")]
    BadFile { path: PathBuf, message: String },
    #[error("output directory {0} is locked by another run (delete .oedkit.lock if it is stale)")]
    Locked(PathBuf),
    #[error("writing {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Numerical(#[from] OedError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(e) if !e.is_validation() => 3,
            CliError::Write { .. } => 3,
            _ => 2,
        }
    }

    pub(crate) fn bad_file(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        CliError::BadFile {
            path: path.into(),
            message: message.to_string(),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
