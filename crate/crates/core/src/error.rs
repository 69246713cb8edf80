use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, FdtnError>;

#[derive(Debug, Error)]
pub enum FdtnError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("reference transform limited to {limit} samples, got {actual}")]
    SizeGuard { limit: usize, actual: usize },

    #[error("blend weights at bin {bin} sum to {sum}, expected 1")]
    WeightNormalization { bin: usize, sum: f64 },

    #[error("malformed {kind} data: {reason}")]
    Format { kind: &'static str, reason: String },

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl FdtnError {
    pub(crate) fn dims(expected: impl Into<String>, actual: impl Into<String>) -> Self {
        FdtnError::DimensionMismatch {
            expected: expected.into(),
            actual: actual.into(),
        }
    }

    pub(crate) fn format(kind: &'static str, reason: impl Into<String>) -> Self {
        FdtnError::Format {
            kind,
            reason: reason.into(),
        }
    }
}
