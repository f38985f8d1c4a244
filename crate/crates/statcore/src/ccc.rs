use nalgebra::DMatrix;

use crate::covariance::{covariance, cross_covariance};
use crate::error::{Result, StatError};
use crate::sample::SampleMatrix;

/// Regularization and acceptance threshold for conditional-correlation tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CccParams {
    /// Tikhonov ridge added to every covariance block before inversion.
    pub tikhonov_lambda: f64,
    /// A CCC below this value is treated as conditional independence.
    pub threshold_epsilon: f64,
}

impl Default for CccParams {
    fn default() -> Self {
        Self {
            tikhonov_lambda: 0.01,
            threshold_epsilon: 0.05,
        }
    }
}

impl CccParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tikhonov_lambda > 0.0 && self.tikhonov_lambda.is_finite()) {
            return Err(StatError::InvalidParam(format!(
                "tikhonov_lambda must be a positive real, got {}",
                self.tikhonov_lambda
            )));
        }
        if !(self.threshold_epsilon > 0.0 && self.threshold_epsilon.is_finite()) {
            return Err(StatError::InvalidParam(format!(
                "threshold_epsilon must be a positive real, got {}",
                self.threshold_epsilon
            )));
        }
        Ok(())
    }
}

/// Conditional correlation coefficient between the column blocks `x` and `y`
/// given `z`:
///
/// ```text
/// CCC = tr(VᵀV),   V = (Σxx+λI)^(-1/2) (Σxy − Σxz (Σzz+λI)^(-1) Σzy) (Σyy+λI)^(-1/2)
/// ```
///
/// Zero CCC is equivalent to `x ⫫ y | z` for jointly Gaussian data; all three
/// inverse / inverse-square-root factors are Tikhonov-regularized with λ.
/// Inputs are centered internally (covariances are translation-invariant, so
/// pre-centered data give identical results).
///
/// The coefficient is mathematically symmetric in `x` and `y`; to make it
/// *bitwise* symmetric the two blocks are put into a canonical order (by
/// column count, then by lexicographic data comparison) before evaluation.
pub fn ccc(x: &SampleMatrix, y: &SampleMatrix, z: &SampleMatrix, params: &CccParams) -> Result<f64> {
    params.validate()?;
    if x.n_rows() != y.n_rows() || x.n_rows() != z.n_rows() {
        return Err(StatError::Dimension(format!(
            "row counts must agree: x={}, y={}, z={}",
            x.n_rows(),
            y.n_rows(),
            z.n_rows()
        )));
    }
    for (name, m) in [("x", x), ("y", y), ("z", z)] {
        if !m.is_finite() {
            return Err(StatError::NonFinite(format!(
                "block {name} contains NaN or infinity"
            )));
        }
    }
    let (a, b) = if canonical_order_leq(x, y) { (x, y) } else { (y, x) };
    let (a, _) = a.center();
    let (b, _) = b.center();
    let (z, _) = z.center();
    let sigma_xx = covariance(&a);
    let sigma_yy = covariance(&b);
    let sigma_zz = covariance(&z);
    let sigma_xy = cross_covariance(&a, &b)?;
    let sigma_xz = cross_covariance(&a, &z)?;
    let sigma_zy = cross_covariance(&z, &b)?;
    ccc_from_covariances(
        &sigma_xx,
        &sigma_xy,
        &sigma_xz,
        &sigma_zz,
        &sigma_zy,
        &sigma_yy,
        params.tikhonov_lambda,
    )
}

/// Covariance-level entry point for the CCC, for callers that already hold
/// the six blocks (e.g. optimizers that assemble them from precomputed raw
/// covariances instead of re-touching the samples on every evaluation).
#[allow(clippy::too_many_arguments)]
pub fn ccc_from_covariances(
    sigma_xx: &DMatrix<f64>,
    sigma_xy: &DMatrix<f64>,
    sigma_xz: &DMatrix<f64>,
    sigma_zz: &DMatrix<f64>,
    sigma_zy: &DMatrix<f64>,
    sigma_yy: &DMatrix<f64>,
    lambda: f64,
) -> Result<f64> {
    let inv_sqrt_xx = regularized_power(sigma_xx, lambda, -0.5, "x")?;
    let inv_sqrt_yy = regularized_power(sigma_yy, lambda, -0.5, "y")?;
    let inv_zz = regularized_power(sigma_zz, lambda, -1.0, "z")?;
    let conditional = sigma_xy - sigma_xz * inv_zz * sigma_zy;
    let v = inv_sqrt_xx * conditional * inv_sqrt_yy;
    Ok(v.iter().map(|e| e * e).sum())
}

/// Computes `(m + λI)^power` through a symmetric eigendecomposition, clamping
/// eigenvalues below λ/10 up to λ/10 first. Clamping keeps the factorization
/// defined for rank-deficient blocks and makes the result deterministic.
fn regularized_power(
    m: &DMatrix<f64>,
    lambda: f64,
    power: f64,
    block: &'static str,
) -> Result<DMatrix<f64>> {
    let p = m.nrows();
    let regularized = m + DMatrix::identity(p, p) * lambda;
    let eig = regularized.symmetric_eigen();
    let floor = lambda / 10.0;
    let mut scaled = eig.eigenvectors.clone();
    for (k, &ev) in eig.eigenvalues.iter().enumerate() {
        if !ev.is_finite() {
            return Err(StatError::Singular {
                block,
                detail: format!("eigenvalue {k} is not finite after regularization"),
            });
        }
        let powered = ev.max(floor).powf(power);
        if !powered.is_finite() {
            return Err(StatError::Singular {
                block,
                detail: format!("eigenvalue {ev:.3e} cannot be raised to {power}"),
            });
        }
        scaled.column_mut(k).scale_mut(powered);
    }
    Ok(&scaled * eig.eigenvectors.transpose())
}

/// Total order making the CCC bitwise symmetric: order by column count, then
/// lexicographically by the raw column-major data.
fn canonical_order_leq(x: &SampleMatrix, y: &SampleMatrix) -> bool {
    match x.n_cols().cmp(&y.n_cols()) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => {
            for (a, b) in x.data().iter().zip(y.data().iter()) {
                match a.total_cmp(b) {
                    std::cmp::Ordering::Less => return true,
                    std::cmp::Ordering::Greater => return false,
                    std::cmp::Ordering::Equal => {}
                }
            }
            true
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian_matrix(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(rng))
    }

    fn sm(data: DMatrix<f64>) -> SampleMatrix {
        SampleMatrix::new(data).unwrap()
    }

    #[test]
    fn conditionally_independent_gaussians_score_near_zero() {
        // x = z + η₁, y = z + η₂ with independent noise: x ⫫ y | z.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 10_000;
        let z = gaussian_matrix(&mut rng, n, 1);
        let x = &z + gaussian_matrix(&mut rng, n, 1);
        let y = &z + gaussian_matrix(&mut rng, n, 1);
        let score = ccc(&sm(x), &sm(y), &sm(z), &CccParams::default()).unwrap();
        assert!(score < 0.02, "expected conditional independence, CCC = {score}");
    }

    #[test]
    fn identical_unit_variance_blocks_approach_one_as_lambda_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 10_000;
        let x = gaussian_matrix(&mut rng, n, 1);
        let z = gaussian_matrix(&mut rng, n, 1);
        let params = CccParams {
            tikhonov_lambda: 1e-8,
            threshold_epsilon: 0.05,
        };
        let score = ccc(&sm(x.clone()), &sm(x), &sm(z), &params).unwrap();
        assert!((score - 1.0).abs() < 0.05, "CCC = {score}");
    }

    #[test]
    fn zero_variance_block_scores_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 100;
        let x = DMatrix::from_element(n, 2, 3.5);
        let y = gaussian_matrix(&mut rng, n, 2);
        let z = gaussian_matrix(&mut rng, n, 1);
        let score = ccc(&sm(x), &sm(y), &sm(z), &CccParams::default()).unwrap();
        assert_eq!(score, 0.0);
    }

    #[test]
    fn swapping_x_and_y_is_bitwise_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let n = 500;
        let z = gaussian_matrix(&mut rng, n, 2);
        let x = &z * gaussian_matrix(&mut rng, 2, 3) + gaussian_matrix(&mut rng, n, 3);
        let y = &z * gaussian_matrix(&mut rng, 2, 2) + gaussian_matrix(&mut rng, n, 2);
        let (x, y, z) = (sm(x), sm(y), sm(z));
        let params = CccParams::default();
        let forward = ccc(&x, &y, &z, &params).unwrap();
        let backward = ccc(&y, &x, &z, &params).unwrap();
        assert_eq!(forward.to_bits(), backward.to_bits());
    }

    #[test]
    fn orthogonal_rotations_change_the_score_by_under_one_percent() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 10_000;
        let z = gaussian_matrix(&mut rng, n, 2);
        // Dependent construction so the score is well away from zero.
        let x = gaussian_matrix(&mut rng, n, 3);
        let y = &x * gaussian_matrix(&mut rng, 3, 3) * 0.8 + gaussian_matrix(&mut rng, n, 3) * 0.3;
        let params = CccParams::default();
        let base = ccc(&sm(x.clone()), &sm(y.clone()), &sm(z.clone()), &params).unwrap();
        assert!(base > 0.2);
        for seed in 0..3 {
            let mut rot_rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let qx = random_orthogonal(&mut rot_rng, 3);
            let qy = random_orthogonal(&mut rot_rng, 3);
            let qz = random_orthogonal(&mut rot_rng, 2);
            let rotated = ccc(
                &sm(&x * &qx),
                &sm(&y * &qy),
                &sm(&z * &qz),
                &params,
            )
            .unwrap();
            let rel = (rotated - base).abs() / base;
            assert!(rel < 0.01, "relative change {rel} under rotation");
        }
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let x = dmatrix![1.0; f64::NAN; 3.0];
        let y = dmatrix![1.0; 2.0; 3.0];
        let z = dmatrix![0.5; 1.5; 2.5];
        let err = ccc(&sm(x), &sm(y), &sm(z), &CccParams::default());
        assert!(matches!(err, Err(StatError::NonFinite(_))));
    }

    #[test]
    fn regularized_power_clamps_rank_deficient_blocks() {
        // Singular matrix: the clamp keeps the inverse square root finite.
        let m = dmatrix![1.0, 1.0; 1.0, 1.0];
        let r = regularized_power(&m, 0.01, -0.5, "x").unwrap();
        assert!(r.iter().all(|v| v.is_finite()));
    }

    fn random_orthogonal(rng: &mut ChaCha8Rng, p: usize) -> DMatrix<f64> {
        let g = DMatrix::from_fn(p, p, |_, _| rng.random::<f64>() - 0.5);
        let qr = g.qr();
        qr.q()
    }
}
