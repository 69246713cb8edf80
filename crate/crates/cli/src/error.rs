use std::fmt::Display;

use fdtn_core::FdtnError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("configuration key `{key}`: expected {expected}, got {value:?}")]
    TypeMismatch {
        key: &'static str,
        value: String,
        expected: String,
    },
    #[error("configuration key `{0}` is required for this command but empty")]
    MissingKey(&'static str),
    #[error("configuration: {0}")]
    Syntax(String),
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Path(String),
    #[error(transparent)]
    Core(#[from] FdtnError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub(crate) fn invalid(key: &str, reason: impl Display) -> Self {
        CliError::Invalid(format!("configuration key `{key}`: {reason}"))
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
