use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid graph structure: {0}")]
    Structure(String),
    #[error("numeric inconsistency: {0}")]
    Numeric(String),
    #[error("operation requires the exo/endo factored form, which is absent")]
    MissingFactoredForm,
}

pub type Result<T> = std::result::Result<T, AnalysisError>;
