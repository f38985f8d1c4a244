use manifold::StiefelPoint;
use nalgebra::DMatrix;

use crate::error::{AnalysisError, Result};

/// Canonical angles between two subspaces, ascending, in radians. When the
/// subspaces have different dimensions only the min(p₁, p₂) smallest angles
/// exist, and `dimension_mismatch` records that the comparison was partial.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalAngles {
    pub angles: Vec<f64>,
    pub dimension_mismatch: bool,
}

impl PrincipalAngles {
    pub fn largest(&self) -> Option<f64> {
        self.angles.last().copied()
    }
}

/// Principal angles between the column spans of two orthonormal bases in the
/// same ambient space: arccos of the singular values of W₁ᵀW₂, clamped into
/// [0, 1] (rounding can push them a few ulps outside). The singular values
/// are taken from the symmetric eigendecomposition of the smaller Gram
/// product, which is reliable even when the product is exactly rank
/// deficient.
pub fn principal_angles(w1: &StiefelPoint, w2: &StiefelPoint) -> Result<PrincipalAngles> {
    if w1.d() != w2.d() {
        return Err(AnalysisError::Dimension(format!(
            "ambient dimensions differ: {} vs {}",
            w1.d(),
            w2.d()
        )));
    }
    let (p1, p2) = (w1.p(), w2.p());
    let dimension_mismatch = p1 != p2;
    if p1.min(p2) == 0 {
        return Ok(PrincipalAngles { angles: Vec::new(), dimension_mismatch });
    }
    let m = w1.matrix().transpose() * w2.matrix();
    let gram = if p1 <= p2 { &m * m.transpose() } else { m.transpose() * &m };
    let eigen = gram.symmetric_eigen();
    let mut angles: Vec<f64> = eigen
        .eigenvalues
        .iter()
        .map(|lambda| lambda.clamp(0.0, 1.0).sqrt().acos())
        .collect();
    angles.sort_by(f64::total_cmp);
    Ok(PrincipalAngles { angles, dimension_mismatch })
}

/// An orthonormal basis of the orthogonal complement of the given subspace:
/// the eigenvectors of I − WWᵀ with eigenvalue 1 (there are exactly d − p of
/// them; the remaining p eigenvalues are 0, so the split at ½ is safe).
pub fn orthogonal_complement(w: &StiefelPoint) -> Result<StiefelPoint> {
    let (d, p) = (w.d(), w.p());
    if p == 0 {
        return StiefelPoint::new(DMatrix::identity(d, d))
            .map_err(|e| AnalysisError::Numeric(e.to_string()));
    }
    if p == d {
        return Ok(StiefelPoint::empty(d));
    }
    let projector = DMatrix::identity(d, d) - w.matrix() * w.matrix().transpose();
    let eigen = projector.symmetric_eigen();
    let keep: Vec<usize> =
        (0..d).filter(|i| eigen.eigenvalues[*i] > 0.5).collect();
    if keep.len() != d - p {
        return Err(AnalysisError::Numeric(format!(
            "complement projector has {} unit eigenvalues, expected {}",
            keep.len(),
            d - p
        )));
    }
    let basis = DMatrix::from_fn(d, keep.len(), |i, j| eigen.eigenvectors[(i, keep[j])]);
    StiefelPoint::new(basis).map_err(|e| AnalysisError::Numeric(e.to_string()))
}
