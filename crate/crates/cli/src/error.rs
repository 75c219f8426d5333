use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("key {0:?} given twice")]
    DuplicateKey(String),
    #[error("missing required key {0:?}")]
    MissingKey(String),
    #[error("key {key:?} not used by {command}; check the spelling")]
    UnusedKey { key: String, command: String },
    #[error("bad value {value:?} for {key:?}: {reason}")]
    BadValue { key: String, value: String, reason: String },
    #[error("{0}")]
    Usage(String),
    #[error("output file: {0}")]
    Output(String),
    #[error(transparent)]
    Core(#[from] sdpi_est::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub(crate) fn bad(key: &str, value: &str, reason: impl Into<String>) -> CliError {
    CliError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: reason.into(),
    }
}
