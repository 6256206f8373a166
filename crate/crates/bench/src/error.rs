use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] bomkc::Error),

    #[error("config: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {message}", path.display())]
    Output { path: PathBuf, message: String },

    #[error("update-count bound violated: {0}")]
    BoundViolation(String),
}

pub type Result<T> = std::result::Result<T, BenchError>;

/// Machine-readable form written to stderr by the CLI.
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub kind: &'static str,
    pub message: String,
}

impl BenchError {
    pub fn kind(&self) -> &'static str {
        match self {
            BenchError::Core(e) => match e {
                bomkc::Error::Parameter(_) => "parameter",
                bomkc::Error::Parse { .. } => "parse",
                bomkc::Error::UnsupportedTask(_) => "unsupported_task",
                bomkc::Error::Io { .. } => "io",
                bomkc::Error::Snapshot(_) => "snapshot",
            },
            BenchError::Config(_) => "config",
            BenchError::Io { .. } | BenchError::Output { .. } => "io",
            BenchError::BoundViolation(_) => "bound_violation",
        }
    }

    pub fn record(&self) -> ErrorRecord {
        ErrorRecord { kind: self.kind(), message: self.to_string() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        BenchError::Io { path: path.into(), source }
    }
}
