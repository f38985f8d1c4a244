use thiserror::Error;

/// Errors produced by the statistical kernels.
#[derive(Debug, Error)]
pub enum StatError {
    /// A sample matrix had fewer than two rows, an empty column set, or two
    /// arguments disagreed on a dimension that must match.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// An input contained NaN or infinity.
    #[error("numeric error: {0}")]
    NonFinite(String),

    /// A regularized matrix factorization still failed; reports which block
    /// (x / y / z) was being processed.
    #[error("singularity in the {block} covariance block: {detail}")]
    Singular { block: &'static str, detail: String },

    /// A probability table violated its normalization or sign constraints.
    #[error("invalid probability table: {0}")]
    InvalidTable(String),

    /// A parameter was outside its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
}

pub type Result<T> = std::result::Result<T, StatError>;
