use manifold::ManifoldError;
use statcore::StatError;

/// Errors raised by dataset construction and subspace discovery.
#[derive(Debug, thiserror::Error)]
pub enum DecomposeError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("statistics failure: {0}")]
    Stat(#[from] StatError),
    #[error("manifold optimization failure: {0}")]
    Manifold(#[from] ManifoldError),
}

pub type Result<T> = std::result::Result<T, DecomposeError>;
