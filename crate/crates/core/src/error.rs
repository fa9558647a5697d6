use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate instance: {0}")]
    DegenerateInstance(String),

    #[error("every row was dropped during preprocessing")]
    EmptyAfterPreprocess,

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("target rate {target} Hz exceeds the instance rate {available} Hz")]
    RateTooHigh { target: f64, available: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("instance has no label")]
    UnlabeledInstance,

    #[error("expected {expected} losses, got {actual}")]
    LossCountMismatch { expected: usize, actual: usize },

    #[error("loss for rate {rate} Hz is not finite")]
    NonFiniteLoss { rate: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
