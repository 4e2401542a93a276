use thiserror::Error;

/// Errors raised by tree, signal and recovery routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SfftError {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Array length does not match the signal dimensions.
    #[error("length mismatch: expected {expected}, got {got}")]
    Length { expected: usize, got: usize },
    /// Two spectra or signals disagree on (n, d).
    #[error("dimension mismatch: {0}")]
    DimsMismatch(String),
    /// A textual frequency vector or spectrum file could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, SfftError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(SfftError::Domain(msg.into()))
}
