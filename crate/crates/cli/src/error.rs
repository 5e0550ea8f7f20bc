use std::io;
use std::path::PathBuf;

use urnlab::UrnError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad configuration or arguments; `at` names the file line or flag.
    #[error("{at}: {msg}")]
    Config { at: String, msg: String },

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },

    #[error("{0}")]
    Records(String),

    #[error("records were produced by config {found}, current config hashes to {expected}; rerun simulate")]
    HashMismatch { expected: String, found: String },

    #[error(transparent)]
    Urn(#[from] UrnError),

    #[error("{0}")]
    Numerical(String),

    #[error("{0}")]
    ChecksFailed(String),
}

impl CliError {
    pub fn config(at: impl Into<String>, msg: impl Into<String>) -> Self {
        CliError::Config { at: at.into(), msg: msg.into() }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> Self {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::ChecksFailed(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
