use thiserror::Error;

#[derive(Debug, Error)]
pub enum RlError {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("environment: {0}")]
    Env(#[from] envs::EnvError),
    #[error("decomposition: {0}")]
    Decompose(#[from] decompose::DecomposeError),
    #[error("reward regression: {0}")]
    Regress(#[from] regress::RegressError),
}

pub type Result<T> = std::result::Result<T, RlError>;
