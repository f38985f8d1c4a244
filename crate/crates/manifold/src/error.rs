use thiserror::Error;

/// Errors produced by Stiefel-manifold construction and optimization.
#[derive(Debug, Error)]
pub enum ManifoldError {
    /// Matrix shapes disagreed with the point's `d×p`.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// A candidate point was too far from orthonormality to repair
    /// (max-norm residual of WᵀW − I above 1e-4).
    #[error("matrix is not orthonormal (‖WᵀW − I‖_max = {residual:.3e}) and beyond repair")]
    NotOrthonormal { residual: f64 },

    /// `W + step` lost column rank, so the QR retraction is undefined.
    #[error("retraction failed: W + step is numerically rank-deficient at column {index} (diag magnitude {magnitude:.3e})")]
    RankDeficient { index: usize, magnitude: f64 },

    /// An objective or gradient probe returned NaN/infinity.
    #[error("numeric error: {0}")]
    NonFinite(String),

    /// Solver settings outside their documented ranges.
    #[error("invalid settings: {0}")]
    InvalidSettings(String),
}

pub type Result<T> = std::result::Result<T, ManifoldError>;
