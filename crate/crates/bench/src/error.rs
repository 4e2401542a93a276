use std::path::PathBuf;

use sfft_core::error::SfftError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] SfftError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, BenchError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(BenchError::Invalid(msg.into()))
}
