//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Structural mismatch between tensors that are required to be
    /// shape-compatible (same names, order and shapes).
    #[error("shape mismatch for tensor `{name}`: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        name: String,
        expected: Vec<usize>,
        got: Vec<usize>,
    },

    /// A precondition on arguments was violated.
    #[error("invalid usage: {0}")]
    Usage(String),

    /// One or more configuration problems, reported together.
    #[error("invalid configuration:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    /// A dataset file could not be parsed or violated the schema.
    #[error("dataset `{path}`: {message}")]
    DatasetParse { path: String, message: String },

    /// Model parameters stopped being finite during a federated run.
    #[error("non-finite model parameter produced at round {round}")]
    NonFinite { round: usize },

    #[error("i/o error on `{path}`: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl Error {
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad inputs/configuration rather than a
    /// failure while running (the CLI maps these to exit code 2).
    pub fn is_config_like(&self) -> bool {
        matches!(
            self,
            Error::Usage(_) | Error::Config(_) | Error::DatasetParse { .. } | Error::ShapeMismatch { .. }
        )
    }
}
