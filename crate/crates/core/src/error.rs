use std::path::PathBuf;
use thiserror::Error;

/// Errors produced by the prediction pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error("ingestion failed for {path}: {reason}")]
    Ingestion { path: PathBuf, reason: String },

    #[error("flow estimation failed: {0}")]
    Estimation(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("training diverged at step {step} (batch {batch}): {reason}")]
    TrainDiverged {
        step: usize,
        batch: usize,
        reason: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
