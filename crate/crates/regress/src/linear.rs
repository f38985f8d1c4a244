use nalgebra::{DMatrix, DVector};

use crate::error::{RegressError, Result};
use crate::model::RewardModel;

/// Ordinary least squares with an intercept.
///
/// The design is centered so the intercept is recovered exactly from the
/// means; the weight vector is solved through a symmetric eigendecomposition
/// of the Gram matrix, which yields the minimum-norm solution when the
/// design is rank-deficient.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    weights: DVector<f64>,
    intercept: f64,
    rank: usize,
}

impl LinearModel {
    pub(crate) fn from_parts(weights: DVector<f64>, intercept: f64, rank: usize) -> Self {
        Self { weights, intercept, rank }
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    /// Numerical rank of the centered design at fit time. Lower than the
    /// number of features when columns were linearly dependent, in which
    /// case the stored weights are the minimum-norm solution.
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn input_dim(&self) -> usize {
        self.weights.len()
    }

    pub fn predict(&self, x: &DVector<f64>) -> f64 {
        self.weights.dot(x) + self.intercept
    }
}

/// Fits `r ≈ x·w + b` by least squares. Rows of `x` are samples; a
/// zero-column design is allowed and produces the intercept-only model
/// `b = mean(r)`.
pub fn fit_linear(x: &DMatrix<f64>, r: &DVector<f64>) -> Result<RewardModel> {
    let n = x.nrows();
    let p = x.ncols();
    if r.len() != n {
        return Err(RegressError::Dimension(format!(
            "design has {n} rows but the target has {} entries",
            r.len()
        )));
    }
    if n == 0 {
        return Err(RegressError::Dimension("cannot fit on an empty sample".into()));
    }
    if n < p {
        return Err(RegressError::Dimension(format!(
            "need at least as many samples as features, got {n} samples for {p} features"
        )));
    }
    if x.iter().any(|v| !v.is_finite()) || r.iter().any(|v| !v.is_finite()) {
        return Err(RegressError::Numeric("design or target contains non-finite values".into()));
    }

    let r_mean = r.mean();
    if p == 0 {
        return Ok(RewardModel::Linear(LinearModel::from_parts(DVector::zeros(0), r_mean, 0)));
    }

    let col_means = DVector::from_fn(p, |j, _| x.column(j).mean());
    let mut xc = x.clone();
    for j in 0..p {
        xc.column_mut(j).add_scalar_mut(-col_means[j]);
    }
    let rc = r.map(|v| v - r_mean);

    // Normal equations via a symmetric eigendecomposition. The feature count
    // is the subspace rank (small), so the squared conditioning is
    // acceptable; eigenvalues below the relative cutoff are treated as zero,
    // making the solution minimum-norm and the surviving count the rank.
    let gram = xc.transpose() * &xc;
    let xtr = xc.transpose() * &rc;
    let eig = gram.symmetric_eigen();
    let lam_max = eig.eigenvalues.amax().max(0.0);
    let tol = lam_max * n.max(p) as f64 * f64::EPSILON;
    let mut weights = DVector::zeros(p);
    let mut rank = 0usize;
    for i in 0..p {
        let lam = eig.eigenvalues[i];
        if lam > tol {
            rank += 1;
            let v = eig.eigenvectors.column(i);
            weights += v * (v.dot(&xtr) / lam);
        }
    }
    if weights.iter().any(|v| !v.is_finite()) {
        return Err(RegressError::Numeric("least-squares solve produced non-finite weights".into()));
    }
    let intercept = r_mean - weights.dot(&col_means);
    Ok(RewardModel::Linear(LinearModel::from_parts(weights, intercept, rank)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn linear(model: &RewardModel) -> &LinearModel {
        match model {
            RewardModel::Linear(m) => m,
            _ => panic!("expected a linear model"),
        }
    }

    #[test]
    fn exact_linear_target_is_fit_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 200;
        let x = DMatrix::from_fn(n, 3, |_, _| rng.random::<f64>() * 4.0 - 2.0);
        let true_w = DVector::from_vec(vec![1.5, -0.7, 0.2]);
        let r = DVector::from_fn(n, |i, _| x.row(i).transpose().dot(&true_w) + 3.0);
        let model = fit_linear(&x, &r).unwrap();
        let rss: f64 = (0..n)
            .map(|i| {
                let e = model.predict(&x.row(i).transpose()) - r[i];
                e * e
            })
            .sum();
        let total: f64 = r.iter().map(|v| v * v).sum();
        assert!(rss / total < 1e-18, "relative rss {}", rss / total);
    }

    #[test]
    fn independent_target_gets_near_zero_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 20_000;
        let x = DMatrix::from_fn(n, 3, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let r = DVector::from_fn(n, |_, _| 5.0 + rng.random::<f64>() - 0.5);
        let model = fit_linear(&x, &r).unwrap();
        let lin = linear(&model);
        for w in lin.weights().iter() {
            assert!(w.abs() < 5.0 / (n as f64).sqrt(), "weight {w} too large for noise");
        }
        let center = DVector::from_fn(3, |j, _| x.column(j).mean());
        assert_abs_diff_eq!(model.predict(&center), r.mean(), epsilon = 1e-10);
    }

    #[test]
    fn hand_solved_one_dimensional_fit() {
        let x = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]);
        let r = DVector::from_vec(vec![2.0, 4.0, 6.0]);
        let model = fit_linear(&x, &r).unwrap();
        let lin = linear(&model);
        assert_abs_diff_eq!(lin.weights()[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(lin.intercept(), 0.0, epsilon = 1e-12);
        assert_eq!(lin.rank(), 1);
    }

    #[test]
    fn duplicated_column_takes_the_minimum_norm_split() {
        let t: Vec<f64> = (0..50).map(|i| i as f64 / 10.0).collect();
        let mut x = DMatrix::zeros(50, 2);
        for (i, &v) in t.iter().enumerate() {
            x[(i, 0)] = v;
            x[(i, 1)] = v;
        }
        let r = DVector::from_fn(50, |i, _| 2.0 * t[i] + 1.0);
        let model = fit_linear(&x, &r).unwrap();
        let lin = linear(&model);
        assert_eq!(lin.rank(), 1);
        // The weight budget of 2 splits evenly across the identical columns.
        assert_abs_diff_eq!(lin.weights()[0], 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(lin.weights()[1], 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(lin.intercept(), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn residuals_are_orthogonal_to_the_design() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 400;
        let x = DMatrix::from_fn(n, 4, |_, _| rng.random::<f64>() * 6.0 - 3.0);
        let r = DVector::from_fn(n, |i, _| {
            (x[(i, 0)] * 2.0 - x[(i, 2)]).sin() + rng.random::<f64>()
        });
        let model = fit_linear(&x, &r).unwrap();
        let resid = DVector::from_fn(n, |i, _| r[i] - model.predict(&x.row(i).transpose()));
        for j in 0..4 {
            let dot = x.column(j).dot(&resid) / n as f64;
            assert!(dot.abs() < 1e-8, "column {j} correlates with residuals: {dot}");
        }
        assert!(resid.mean().abs() < 1e-10);
    }

    #[test]
    fn zero_column_design_predicts_the_mean() {
        let x = DMatrix::zeros(4, 0);
        let r = DVector::from_vec(vec![1.0, 2.0, 3.0, 6.0]);
        let model = fit_linear(&x, &r).unwrap();
        assert_abs_diff_eq!(model.predict(&DVector::zeros(0)), 3.0, epsilon = 1e-15);
    }

    #[test]
    fn shape_and_finiteness_are_validated() {
        let x = DMatrix::zeros(3, 2);
        let r = DVector::from_vec(vec![1.0, 2.0]);
        assert!(matches!(fit_linear(&x, &r), Err(RegressError::Dimension(_))));

        let x = DMatrix::from_element(2, 3, 1.0);
        let r = DVector::from_vec(vec![1.0, 2.0]);
        assert!(matches!(fit_linear(&x, &r), Err(RegressError::Dimension(_))));

        let x = DMatrix::from_element(3, 1, f64::NAN);
        let r = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert!(matches!(fit_linear(&x, &r), Err(RegressError::Numeric(_))));
    }
}
