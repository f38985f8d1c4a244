use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{ManifoldError, Result};

/// Orthonormality residual at which a point is accepted as-is.
const ACCEPT_TOL: f64 = 1e-8;
/// Residual up to which a drifted point is silently re-orthonormalized.
const REPAIR_TOL: f64 = 1e-4;

/// A point on the Stiefel manifold: a `d×p` matrix with orthonormal columns
/// (`‖WᵀW − I‖_max ≤ 1e-8`). `p = 0` is permitted as the degenerate empty
/// point (the invariant holds vacuously); optimization requires `p ≥ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct StiefelPoint {
    w: DMatrix<f64>,
}

impl StiefelPoint {
    /// Validates (and, for residuals in `(1e-8, 1e-4]`, re-orthonormalizes)
    /// a candidate matrix. Residuals above `1e-4` are rejected.
    pub fn new(w: DMatrix<f64>) -> Result<Self> {
        if w.ncols() > w.nrows() {
            return Err(ManifoldError::Dimension(format!(
                "need p ≤ d, got {}×{}",
                w.nrows(),
                w.ncols()
            )));
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(ManifoldError::NonFinite("candidate point contains NaN/inf".into()));
        }
        let residual = orthonormality_residual(&w);
        if residual <= ACCEPT_TOL {
            Ok(Self { w })
        } else if residual <= REPAIR_TOL {
            Ok(Self {
                w: sign_corrected_q(&w)?,
            })
        } else {
            Err(ManifoldError::NotOrthonormal { residual })
        }
    }

    /// The degenerate `d×0` point.
    pub fn empty(d: usize) -> Self {
        Self {
            w: DMatrix::zeros(d, 0),
        }
    }

    pub fn d(&self) -> usize {
        self.w.nrows()
    }

    pub fn p(&self) -> usize {
        self.w.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.w
    }

    /// Max-norm residual of `WᵀW − I`.
    pub fn residual(&self) -> f64 {
        orthonormality_residual(&self.w)
    }
}

fn orthonormality_residual(w: &DMatrix<f64>) -> f64 {
    let p = w.ncols();
    let gram = w.transpose() * w;
    let mut residual: f64 = 0.0;
    for i in 0..p {
        for j in 0..p {
            let target = if i == j { 1.0 } else { 0.0 };
            residual = residual.max((gram[(i, j)] - target).abs());
        }
    }
    residual
}

/// Thin QR with the sign correction that makes the diagonal of R positive,
/// which pins down the otherwise sign-ambiguous Q uniquely.
fn sign_corrected_q(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let qr = m.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    let scale = m.amax().max(1.0);
    for j in 0..r.nrows().min(r.ncols()) {
        let diag = r[(j, j)];
        if diag.abs() <= 1e-13 * scale {
            return Err(ManifoldError::RankDeficient {
                index: j,
                magnitude: diag.abs(),
            });
        }
        if diag < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Ok(q)
}

/// Projects a Euclidean gradient onto the tangent space at `point`:
/// `T = G − W·sym(WᵀG)` with `sym(M) = (M + Mᵀ)/2`. The result satisfies
/// `WᵀT + TᵀW = 0`.
pub fn tangent_project(point: &StiefelPoint, euclidean_grad: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let w = point.matrix();
    if euclidean_grad.shape() != w.shape() {
        return Err(ManifoldError::Dimension(format!(
            "gradient is {:?}, point is {:?}",
            euclidean_grad.shape(),
            w.shape()
        )));
    }
    let wtg = w.transpose() * euclidean_grad;
    let sym = (&wtg + wtg.transpose()) * 0.5;
    Ok(euclidean_grad - w * sym)
}

/// QR retraction: maps a tangent step back onto the manifold as the
/// sign-corrected Q factor of `W + step`.
pub fn retract(point: &StiefelPoint, tangent_step: &DMatrix<f64>) -> Result<StiefelPoint> {
    let w = point.matrix();
    if tangent_step.shape() != w.shape() {
        return Err(ManifoldError::Dimension(format!(
            "step is {:?}, point is {:?}",
            tangent_step.shape(),
            w.shape()
        )));
    }
    let q = sign_corrected_q(&(w + tangent_step))?;
    StiefelPoint::new(q)
}

/// A uniformly seeded random Stiefel point: the sign-corrected Q factor of a
/// `d×p` matrix with independent standard-Gaussian entries.
pub fn random_stiefel(d: usize, p: usize, seed: u64) -> Result<StiefelPoint> {
    if p == 0 || p > d {
        return Err(ManifoldError::Dimension(format!("need 1 ≤ p ≤ d, got d={d}, p={p}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(d, p, |_, _| StandardNormal.sample(&mut rng));
    StiefelPoint::new(sign_corrected_q(&g)?)
}
