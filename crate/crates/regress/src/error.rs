use thiserror::Error;

/// Errors produced while fitting or applying reward models.
#[derive(Debug, Error)]
pub enum RegressError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("wrong model kind: {0}")]
    Kind(String),
    #[error("checkpoint i/o failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed checkpoint: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, RegressError>;
