//! Error type shared by all modules of the crate.

use std::path::PathBuf;

/// Errors produced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller-supplied argument violates a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Not enough observations to perform the requested operation.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A model fit could not be completed (singular system, unstable fit,
    /// degenerate spectrum).
    #[error("fit failure: {0}")]
    FitFailure(String),

    /// Malformed input data, with a 1-based line/column position.
    #[error("input error at line {line}, column {column}: {message}")]
    Input {
        line: usize,
        column: usize,
        message: String,
    },

    /// An I/O failure, annotated with the path involved.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the CLI for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::FitFailure(_) => 3,
            Error::Io { .. } => 4,
            _ => 2,
        }
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
