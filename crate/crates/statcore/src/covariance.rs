use nalgebra::DMatrix;

use crate::error::{Result, StatError};
use crate::sample::SampleMatrix;

/// Sample covariance matrix of the columns of `x`, normalized by N (the
/// population convention — the conditional correlation coefficient is
/// scale-consistent under either convention, so the simpler one is used).
///
/// Centers internally when `x` is not already centered.
pub fn covariance(x: &SampleMatrix) -> DMatrix<f64> {
    let (c, _) = x.center();
    let n = c.n_rows() as f64;
    c.data().transpose() * c.data() / n
}

/// Sample cross-covariance between the columns of `x` and the columns of `y`,
/// with the same normalization as [`covariance`]. Requires equal row counts.
pub fn cross_covariance(x: &SampleMatrix, y: &SampleMatrix) -> Result<DMatrix<f64>> {
    if x.n_rows() != y.n_rows() {
        return Err(StatError::Dimension(format!(
            "row-count mismatch: {} vs {}",
            x.n_rows(),
            y.n_rows()
        )));
    }
    let (cx, _) = x.center();
    let (cy, _) = y.center();
    let n = cx.n_rows() as f64;
    Ok(cx.data().transpose() * cy.data() / n)
}
