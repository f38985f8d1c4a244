use nalgebra::{DMatrix, DVector};
use statcore::SampleMatrix;

use crate::error::{DecomposeError, Result};

/// A logged batch of transitions `(s, a, r, s′)` with rows as samples.
///
/// Current and next states are stored centered by the *same* translation —
/// the column means of the observed current states — so that a projection
/// learned on `s` applies unchanged to `s′`. Covariance computations
/// internally re-center each block to its own mean, which is the convention
/// the conditional-correlation score expects.
///
/// Construction also precomputes the six second-moment blocks among
/// `(s, s′, a)`. Every objective evaluation during discovery assembles its
/// covariance blocks from these by sandwiching with the candidate projection,
/// an O(d³) operation, instead of touching the N samples again.
#[derive(Debug, Clone)]
pub struct TransitionDataset {
    s: SampleMatrix,
    a: SampleMatrix,
    r: DVector<f64>,
    s_next: SampleMatrix,
    shift: DVector<f64>,
    blocks: CovarianceBlocks,
}

/// Own-mean-centered second-moment blocks among current states (`s`),
/// next states (`n`), and actions (`a`), normalized by N.
#[derive(Debug, Clone)]
pub(crate) struct CovarianceBlocks {
    /// Cov(s, s) — d×d.
    pub c_ss: DMatrix<f64>,
    /// Cov(s′, s′) — d×d.
    pub c_nn: DMatrix<f64>,
    /// Cov(s′, s) — d×d.
    pub c_ns: DMatrix<f64>,
    /// Cov(s, a) — d×l.
    pub c_sa: DMatrix<f64>,
    /// Cov(s′, a) — d×l.
    pub c_na: DMatrix<f64>,
    /// Cov(a, a) — l×l.
    pub c_aa: DMatrix<f64>,
}

impl TransitionDataset {
    /// Builds a dataset from raw (uncentered) observations. `s` and `s_next`
    /// are N×d, `a` is N×l, `r` has length N.
    pub fn from_raw(
        s: DMatrix<f64>,
        a: DMatrix<f64>,
        r: DVector<f64>,
        s_next: DMatrix<f64>,
    ) -> Result<Self> {
        let n = s.nrows();
        let d = s.ncols();
        if s_next.nrows() != n || a.nrows() != n || r.len() != n {
            return Err(DecomposeError::Dimension(format!(
                "row counts must agree: s={n}, a={}, r={}, s_next={}",
                a.nrows(),
                r.len(),
                s_next.nrows()
            )));
        }
        if s_next.ncols() != d {
            return Err(DecomposeError::Dimension(format!(
                "state dimension mismatch: s has {d} columns, s_next has {}",
                s_next.ncols()
            )));
        }
        if n < 2 {
            return Err(DecomposeError::InsufficientData(format!(
                "need at least 2 transitions, got {n}"
            )));
        }
        if d == 0 || a.ncols() == 0 {
            return Err(DecomposeError::Dimension(
                "states and actions need at least one column each".into(),
            ));
        }
        for (name, m) in [("s", &s), ("a", &a), ("s_next", &s_next)] {
            if m.iter().any(|v| !v.is_finite()) {
                return Err(DecomposeError::InvalidParam(format!(
                    "{name} contains NaN or infinity"
                )));
            }
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(DecomposeError::InvalidParam("r contains NaN or infinity".into()));
        }

        // Shared translation: the mean of the observed current states.
        let shift = DVector::from_fn(d, |j, _| s.column(j).mean());
        let mut s_c = s;
        let mut s_next_c = s_next;
        for j in 0..d {
            for i in 0..n {
                s_c[(i, j)] -= shift[j];
                s_next_c[(i, j)] -= shift[j];
            }
        }

        let blocks = CovarianceBlocks::build(&s_c, &s_next_c, &a);
        Ok(Self {
            s: SampleMatrix::from_raw(s_c, true).map_err(DecomposeError::Stat)?,
            a: SampleMatrix::new(a).map_err(DecomposeError::Stat)?,
            r,
            // Centered by the current-state mean, not its own, so its column
            // means are close to but not exactly zero.
            s_next: SampleMatrix::new(s_next_c).map_err(DecomposeError::Stat)?,
            shift,
            blocks,
        })
    }

    pub fn n(&self) -> usize {
        self.s.n_rows()
    }

    /// State dimension d.
    pub fn d(&self) -> usize {
        self.s.n_cols()
    }

    /// Action dimension l.
    pub fn l(&self) -> usize {
        self.a.n_cols()
    }

    pub fn s(&self) -> &SampleMatrix {
        &self.s
    }

    pub fn a(&self) -> &SampleMatrix {
        &self.a
    }

    pub fn r(&self) -> &DVector<f64> {
        &self.r
    }

    pub fn s_next(&self) -> &SampleMatrix {
        &self.s_next
    }

    /// The translation that was subtracted from both `s` and `s_next`.
    pub fn shift(&self) -> &DVector<f64> {
        &self.shift
    }

    pub(crate) fn blocks(&self) -> &CovarianceBlocks {
        &self.blocks
    }
}

impl CovarianceBlocks {
    fn build(s: &DMatrix<f64>, s_next: &DMatrix<f64>, a: &DMatrix<f64>) -> Self {
        let n = s.nrows() as f64;
        let s_c = center_columns(s);
        let n_c = center_columns(s_next);
        let a_c = center_columns(a);
        Self {
            c_ss: s_c.transpose() * &s_c / n,
            c_nn: n_c.transpose() * &n_c / n,
            c_ns: n_c.transpose() * &s_c / n,
            c_sa: s_c.transpose() * &a_c / n,
            c_na: n_c.transpose() * &a_c / n,
            c_aa: a_c.transpose() * &a_c / n,
        }
    }
}

fn center_columns(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut c = m.clone();
    for j in 0..c.ncols() {
        let mean = c.column(j).mean();
        for i in 0..c.nrows() {
            c[(i, j)] -= mean;
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::dmatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};
    use statcore::{covariance, cross_covariance};

    fn gaussian(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(rng))
    }

    #[test]
    fn current_states_are_centered_and_next_states_share_the_translation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = gaussian(&mut rng, 50, 3).add_scalar(2.0);
        let s_next = gaussian(&mut rng, 50, 3).add_scalar(2.5);
        let a = gaussian(&mut rng, 50, 1);
        let r = DVector::zeros(50);
        let data = TransitionDataset::from_raw(s.clone(), a, r, s_next.clone()).unwrap();

        for j in 0..3 {
            assert_abs_diff_eq!(data.s().data().column(j).mean(), 0.0, epsilon = 1e-12);
            // s_next keeps its own offset relative to the shared shift.
            let expected = s_next.column(j).mean() - data.shift()[j];
            assert_abs_diff_eq!(data.s_next().data().column(j).mean(), expected, epsilon = 1e-12);
        }
        // The same shift reconstructs the raw data.
        for i in 0..50 {
            for j in 0..3 {
                assert_abs_diff_eq!(
                    data.s().data()[(i, j)] + data.shift()[j],
                    s[(i, j)],
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn covariance_blocks_match_sample_level_estimators() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = gaussian(&mut rng, 80, 3).add_scalar(1.0);
        let s_next = gaussian(&mut rng, 80, 3).add_scalar(-0.5);
        let a = gaussian(&mut rng, 80, 2);
        let data =
            TransitionDataset::from_raw(s, a.clone(), DVector::zeros(80), s_next).unwrap();

        let s_m = data.s().clone();
        let n_m = data.s_next().clone();
        let a_m = SampleMatrix::new(a).unwrap();
        let b = data.blocks();
        assert_abs_diff_eq!(b.c_ss, covariance(&s_m), epsilon = 1e-12);
        assert_abs_diff_eq!(b.c_nn, covariance(&n_m), epsilon = 1e-12);
        assert_abs_diff_eq!(b.c_ns, cross_covariance(&n_m, &s_m).unwrap(), epsilon = 1e-12);
        assert_abs_diff_eq!(b.c_sa, cross_covariance(&s_m, &a_m).unwrap(), epsilon = 1e-12);
        assert_abs_diff_eq!(b.c_na, cross_covariance(&n_m, &a_m).unwrap(), epsilon = 1e-12);
        assert_abs_diff_eq!(b.c_aa, covariance(&a_m), epsilon = 1e-12);
    }

    #[test]
    fn mismatched_row_counts_are_rejected() {
        let s = dmatrix![1.0, 2.0; 3.0, 4.0; 5.0, 6.0];
        let s_next = dmatrix![1.0, 2.0; 3.0, 4.0];
        let a = dmatrix![0.0; 1.0; 0.0];
        let r = DVector::zeros(3);
        assert!(matches!(
            TransitionDataset::from_raw(s, a, r, s_next),
            Err(DecomposeError::Dimension(_))
        ));
    }

    #[test]
    fn non_finite_rewards_are_rejected() {
        let s = dmatrix![1.0; 2.0; 3.0];
        let s_next = dmatrix![2.0; 3.0; 4.0];
        let a = dmatrix![0.0; 1.0; 0.0];
        let r = DVector::from_vec(vec![0.0, f64::NAN, 1.0]);
        assert!(matches!(
            TransitionDataset::from_raw(s, a, r, s_next),
            Err(DecomposeError::InvalidParam(_))
        ));
    }
}
