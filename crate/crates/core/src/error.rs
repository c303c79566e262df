use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: u64,
        reason: String,
    },

    #[error("paper {paper_id}: {reason}")]
    Trajectory { paper_id: u64, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name,
            reason: reason.into(),
        }
    }

    /// Short machine-readable tag for error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParam { .. } => "invalid_param",
            Error::InvalidInput(_) => "invalid_input",
            Error::OutOfRange(_) => "out_of_range",
            Error::Degenerate(_) => "degenerate",
            Error::Parse { .. } => "parse",
            Error::Trajectory { .. } => "trajectory",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
