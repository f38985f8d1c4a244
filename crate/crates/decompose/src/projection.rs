use manifold::StiefelPoint;
use nalgebra::{DMatrix, DVector};
use statcore::CccParams;

use crate::dataset::TransitionDataset;
use crate::error::{DecomposeError, Result};
use crate::objective;

/// Which conditional-independence criterion a projection claims to satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintMode {
    /// The projected next state is independent of the current endogenous
    /// state and the action, given the projected current state.
    Full,
    /// Additionally independent of the *next* endogenous state.
    Diachronic,
}

/// An orthonormal basis `W` of the discovered exogenous subspace, together
/// with the criterion it was verified against and the score it achieved.
///
/// The exogenous component of a state is `W Wᵀ s`; the endogenous component
/// is the remainder `s − W Wᵀ s`. A rank of zero is a legitimate outcome (no
/// exogenous structure found): the exogenous component is then zero and the
/// endogenous side is the identity.
#[derive(Debug, Clone)]
pub struct ExoProjection {
    w_exo: StiefelPoint,
    d_exo: usize,
    achieved_ccc_full: f64,
    mode: ConstraintMode,
}

impl ExoProjection {
    pub fn new(w_exo: StiefelPoint, achieved_ccc_full: f64, mode: ConstraintMode) -> Result<Self> {
        if !(achieved_ccc_full >= 0.0 && achieved_ccc_full.is_finite()) {
            return Err(DecomposeError::InvalidParam(format!(
                "achieved CCC must be a nonnegative real, got {achieved_ccc_full}"
            )));
        }
        let d_exo = w_exo.p();
        Ok(Self {
            w_exo,
            d_exo,
            achieved_ccc_full,
            mode,
        })
    }

    /// The rank-zero projection for a d-dimensional state space.
    pub fn zero_rank(d: usize, mode: ConstraintMode) -> Self {
        Self {
            w_exo: StiefelPoint::empty(d),
            d_exo: 0,
            achieved_ccc_full: 0.0,
            mode,
        }
    }

    /// Ambient state dimension d.
    pub fn d(&self) -> usize {
        self.w_exo.d()
    }

    /// Discovered exogenous rank.
    pub fn d_exo(&self) -> usize {
        self.d_exo
    }

    pub fn achieved_ccc_full(&self) -> f64 {
        self.achieved_ccc_full
    }

    pub fn mode(&self) -> ConstraintMode {
        self.mode
    }

    pub fn w_exo(&self) -> &StiefelPoint {
        &self.w_exo
    }

    /// Exogenous component `W Wᵀ s`.
    pub fn exo(&self, s: &DVector<f64>) -> DVector<f64> {
        if self.d_exo == 0 {
            return DVector::zeros(self.d());
        }
        let w = self.w_exo.matrix();
        w * (w.transpose() * s)
    }

    /// Endogenous component `s − W Wᵀ s`; the identity at rank zero.
    pub fn endo(&self, s: &DVector<f64>) -> DVector<f64> {
        if self.d_exo == 0 {
            return s.clone();
        }
        s - self.exo(s)
    }

    /// Both components at once; they sum back to `s` by construction (the
    /// endogenous part is defined as the remainder).
    pub fn split(&self, s: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let exo = self.exo(s);
        let endo = s - &exo;
        (exo, endo)
    }

    /// Coordinates of the exogenous component in the basis `W`, i.e. `Wᵀ s`
    /// — the d_exo-dimensional input that reward regression consumes.
    pub fn coordinates(&self, s: &DVector<f64>) -> DVector<f64> {
        self.w_exo.matrix().transpose() * s
    }
}

/// Result of one discovery run: the projection, the score trace over the
/// ranks the scan visited, and timing.
#[derive(Debug, Clone)]
pub struct DecompositionReport {
    pub projection: ExoProjection,
    /// `(rank, verification CCC)` in visit order; ranks are strictly
    /// monotone. A rank whose optimization failed numerically is recorded
    /// with an infinite score.
    pub per_rank_ccc: Vec<(usize, f64)>,
    /// Wall-clock seconds spent in the discovery call.
    pub wall_time: f64,
    /// Which algorithm and objective produced this report.
    pub algorithm: String,
    /// Human-readable notes for ranks that failed or scans that ended early.
    pub diagnostics: Vec<String>,
}

impl DecompositionReport {
    /// Serializes to a line-oriented, tab-separated record.
    pub fn to_record(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("algorithm\t{}\n", self.algorithm));
        out.push_str(&format!("d\t{}\n", self.projection.d()));
        out.push_str(&format!("d_exo\t{}\n", self.projection.d_exo()));
        out.push_str(&format!(
            "mode\t{}\n",
            match self.projection.mode() {
                ConstraintMode::Full => "full",
                ConstraintMode::Diachronic => "diachronic",
            }
        ));
        out.push_str(&format!(
            "achieved_ccc_full\t{:.17e}\n",
            self.projection.achieved_ccc_full()
        ));
        out.push_str(&format!("wall_time_seconds\t{:.6}\n", self.wall_time));
        for (rank, ccc) in &self.per_rank_ccc {
            out.push_str(&format!("per_rank\t{rank}\t{ccc:.17e}\n"));
        }
        let w = self.projection.w_exo().matrix();
        for i in 0..w.nrows() {
            out.push_str("w_row");
            for j in 0..w.ncols() {
                out.push_str(&format!("\t{:.17e}", w[(i, j)]));
            }
            out.push('\n');
        }
        for note in &self.diagnostics {
            out.push_str(&format!("note\t{note}\n"));
        }
        out
    }
}

/// Recomputes the projection's validity criterion on a dataset: the full or
/// diachronic CCC, depending on the projection's mode. Returns the score and
/// whether it clears the acceptance threshold. The rank-zero projection is
/// vacuously valid with a score of zero.
pub fn verify_projection(
    data: &TransitionDataset,
    projection: &ExoProjection,
    params: &CccParams,
) -> Result<(f64, bool)> {
    params.validate().map_err(DecomposeError::Stat)?;
    if projection.d() != data.d() {
        return Err(DecomposeError::Dimension(format!(
            "projection is over a {}-dimensional state space, dataset has d={}",
            projection.d(),
            data.d()
        )));
    }
    if projection.d_exo() == 0 {
        return Ok((0.0, true));
    }
    let ccc = objective::ccc_full(
        data.blocks(),
        projection.w_exo().matrix(),
        params.tikhonov_lambda,
        projection.mode() == ConstraintMode::Diachronic,
    )?;
    Ok((ccc, ccc < params.threshold_epsilon))
}

/// Reorders the columns of an orthonormal basis by descending explained
/// variance of the projected current states (`wᵀ Cov(s,s) w`), the reporting
/// convention that makes bases comparable across runs. Ties keep their
/// relative order.
pub(crate) fn canonical_columns(w: &DMatrix<f64>, c_ss: &DMatrix<f64>) -> DMatrix<f64> {
    if w.ncols() <= 1 {
        return w.clone();
    }
    let mut order: Vec<usize> = (0..w.ncols()).collect();
    let variance: Vec<f64> = (0..w.ncols())
        .map(|j| {
            let col = w.column(j);
            (c_ss * col).dot(&col)
        })
        .collect();
    order.sort_by(|&a, &b| variance[b].total_cmp(&variance[a]));
    let mut out = DMatrix::zeros(w.nrows(), w.ncols());
    for (dst, &src) in order.iter().enumerate() {
        out.set_column(dst, &w.column(src));
    }
    out
}
