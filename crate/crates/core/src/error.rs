use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {context}: expected {expected}, found {found}")]
    Shape {
        context: String,
        expected: String,
        found: String,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("non-finite gradient in tensor {tensor} at index {index}")]
    NonFiniteGradient { tensor: String, index: usize },

    #[error(
        "gradient check failed: {tensor}[{index}] relative error {rel_error:.3e} exceeds {tolerance:.1e} (analytic {analytic:.6e}, numeric {numeric:.6e})"
    )]
    GradientMismatch {
        tensor: String,
        index: usize,
        rel_error: f64,
        tolerance: f64,
        analytic: f64,
        numeric: f64,
    },

    #[error("training diverged: non-finite loss at epoch {epoch}, batch {batch}")]
    Diverged { epoch: usize, batch: usize },

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: frame {frame}: {message}")]
    InvalidFrame {
        path: PathBuf,
        frame: usize,
        message: String,
    },

    #[error("{0}: no frames")]
    Empty(PathBuf),

    #[error("checkpoint version mismatch: file has version {found}, this build reads version {expected}")]
    CheckpointVersion { expected: u32, found: u32 },

    #[error("shape mismatch: {name} (expected {expected}, found {found})")]
    CheckpointShape {
        name: String,
        expected: String,
        found: String,
    },

    #[error("checkpoint truncated: {0}")]
    CheckpointTruncated(String),

    #[error("invalid checkpoint: {0}")]
    CheckpointFormat(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn shape(
        context: impl Into<String>,
        expected: impl std::fmt::Display,
        found: impl std::fmt::Display,
    ) -> Self {
        Error::Shape {
            context: context.into(),
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
