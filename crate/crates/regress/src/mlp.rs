use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{RegressError, Result};
use crate::model::RewardModel;
use crate::schedule::RegressionSchedule;

/// Hidden layer widths of the reward network.
pub const HIDDEN: [usize; 2] = [50, 25];

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;
/// Relative training-loss improvement below this, sustained over
/// `CONVERGENCE_WINDOW` epochs, ends phase-1 fitting early.
const CONVERGENCE_TOL: f64 = 1e-5;
const CONVERGENCE_WINDOW: usize = 5;

/// A small rectified-linear regression network with its adaptive-moment
/// optimizer state, so incremental updates can resume where fitting stopped.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    weights: Vec<DMatrix<f64>>,
    biases: Vec<DVector<f64>>,
    m_w: Vec<DMatrix<f64>>,
    v_w: Vec<DMatrix<f64>>,
    m_b: Vec<DVector<f64>>,
    v_b: Vec<DVector<f64>>,
    step: u64,
    learning_rate: f64,
    l2: f64,
    batch_size: usize,
}

impl MlpModel {
    /// Fresh network with uniform fan-in-scaled weights.
    pub(crate) fn new(input_dim: usize, schedule: &RegressionSchedule, rng: &mut ChaCha8Rng) -> Self {
        let dims: Vec<usize> = std::iter::once(input_dim)
            .chain(HIDDEN)
            .chain(std::iter::once(1))
            .collect();
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for pair in dims.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
            weights.push(DMatrix::from_fn(fan_out, fan_in, |_, _| {
                (rng.random::<f64>() * 2.0 - 1.0) * bound
            }));
            biases.push(DVector::from_fn(fan_out, |_, _| {
                (rng.random::<f64>() * 2.0 - 1.0) * bound
            }));
        }
        let m_w = weights.iter().map(|w| DMatrix::zeros(w.nrows(), w.ncols())).collect();
        let v_w = weights.iter().map(|w| DMatrix::zeros(w.nrows(), w.ncols())).collect();
        let m_b = biases.iter().map(|b| DVector::zeros(b.len())).collect();
        let v_b = biases.iter().map(|b| DVector::zeros(b.len())).collect();
        Self {
            weights,
            biases,
            m_w,
            v_w,
            m_b,
            v_b,
            step: 0,
            learning_rate: schedule.learning_rate,
            l2: schedule.l2,
            batch_size: schedule.batch_size,
        }
    }

    pub(crate) fn from_parts(
        weights: Vec<DMatrix<f64>>,
        biases: Vec<DVector<f64>>,
        learning_rate: f64,
        l2: f64,
        batch_size: usize,
    ) -> Self {
        let m_w = weights.iter().map(|w| DMatrix::zeros(w.nrows(), w.ncols())).collect();
        let v_w = weights.iter().map(|w| DMatrix::zeros(w.nrows(), w.ncols())).collect();
        let m_b = biases.iter().map(|b| DVector::zeros(b.len())).collect();
        let v_b = biases.iter().map(|b| DVector::zeros(b.len())).collect();
        Self {
            weights,
            biases,
            m_w,
            v_w,
            m_b,
            v_b,
            step: 0,
            learning_rate,
            l2,
            batch_size,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weights[0].ncols()
    }

    pub fn optimizer_step(&self) -> u64 {
        self.step
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn l2(&self) -> f64 {
        self.l2
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub(crate) fn layers(&self) -> (&[DMatrix<f64>], &[DVector<f64>]) {
        (&self.weights, &self.biases)
    }

    /// Forward pass over a batch (rows are samples). Returns the activations
    /// of every layer input plus the final predictions.
    fn forward(&self, x: &DMatrix<f64>) -> (Vec<DMatrix<f64>>, DVector<f64>) {
        let mut inputs = Vec::with_capacity(self.weights.len());
        let mut cur = x.clone();
        for (i, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = &cur * w.transpose();
            for mut row in z.row_iter_mut() {
                row += b.transpose();
            }
            if i + 1 < self.weights.len() {
                z.apply(|v| {
                    if !(*v > 0.0) {
                        *v = 0.0;
                    }
                });
            }
            inputs.push(cur);
            cur = z;
        }
        let y = cur.column(0).into_owned();
        (inputs, y)
    }

    pub fn predict(&self, x: &DVector<f64>) -> f64 {
        let row = DMatrix::from_row_slice(1, x.len(), x.as_slice());
        self.forward(&row).1[0]
    }

    pub fn predict_batch(&self, x: &DMatrix<f64>) -> DVector<f64> {
        self.forward(x).1
    }

    /// One gradient step on the mean squared error of the batch (plus L2
    /// weight decay). Returns the pre-update batch loss.
    fn train_batch(&mut self, x: &DMatrix<f64>, r: &DVector<f64>) -> f64 {
        let n = x.nrows();
        let (inputs, y) = self.forward(x);
        let err = &y - r;
        let mse = err.norm_squared() / n as f64;

        let mut grad_w = Vec::with_capacity(self.weights.len());
        let mut grad_b = Vec::with_capacity(self.weights.len());
        let mut delta = DMatrix::from_column_slice(n, 1, err.as_slice()) * (2.0 / n as f64);
        for layer in (0..self.weights.len()).rev() {
            let a_prev = &inputs[layer];
            let mut gw = delta.transpose() * a_prev;
            gw += self.l2 * &self.weights[layer];
            grad_w.push(gw);
            grad_b.push(delta.row_sum().transpose());
            if layer > 0 {
                let mut back = &delta * &self.weights[layer];
                back.zip_apply(a_prev, |b, a| {
                    if !(a > 0.0) {
                        *b = 0.0;
                    }
                });
                delta = back;
            }
        }
        grad_w.reverse();
        grad_b.reverse();
        self.adam_step(&grad_w, &grad_b);
        mse
    }

    fn adam_step(&mut self, grad_w: &[DMatrix<f64>], grad_b: &[DVector<f64>]) {
        self.step += 1;
        let bc1 = 1.0 - BETA1.powi(self.step.min(i32::MAX as u64) as i32);
        let bc2 = 1.0 - BETA2.powi(self.step.min(i32::MAX as u64) as i32);
        for i in 0..self.weights.len() {
            update_tensor(
                self.weights[i].as_mut_slice(),
                self.m_w[i].as_mut_slice(),
                self.v_w[i].as_mut_slice(),
                grad_w[i].as_slice(),
                self.learning_rate,
                bc1,
                bc2,
            );
            update_tensor(
                self.biases[i].as_mut_slice(),
                self.m_b[i].as_mut_slice(),
                self.v_b[i].as_mut_slice(),
                grad_b[i].as_slice(),
                self.learning_rate,
                bc1,
                bc2,
            );
        }
    }
}

fn update_tensor(
    theta: &mut [f64],
    m: &mut [f64],
    v: &mut [f64],
    g: &[f64],
    lr: f64,
    bc1: f64,
    bc2: f64,
) {
    for i in 0..theta.len() {
        m[i] = BETA1 * m[i] + (1.0 - BETA1) * g[i];
        v[i] = BETA2 * v[i] + (1.0 - BETA2) * g[i] * g[i];
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        theta[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
    }
}

fn validate_batch(input_dim: usize, x: &DMatrix<f64>, r: &DVector<f64>) -> Result<()> {
    if x.ncols() != input_dim {
        return Err(RegressError::Dimension(format!(
            "model consumes {input_dim} features, batch has {}",
            x.ncols()
        )));
    }
    if x.nrows() != r.len() {
        return Err(RegressError::Dimension(format!(
            "batch has {} rows but {} targets",
            x.nrows(),
            r.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) || r.iter().any(|v| !v.is_finite()) {
        return Err(RegressError::Numeric("batch contains non-finite values".into()));
    }
    Ok(())
}

/// Fits the reward network on a buffer of samples: shuffled mini-batches,
/// adaptive-moment updates, at most `phase1_max_epochs` epochs, stopping
/// early once the training loss plateaus. Deterministic for a given seed.
pub fn fit_mlp_phase1(
    x: &DMatrix<f64>,
    r: &DVector<f64>,
    schedule: &RegressionSchedule,
    seed: u64,
) -> Result<RewardModel> {
    schedule.validate()?;
    if x.nrows() == 0 {
        return Err(RegressError::Dimension("cannot fit on an empty sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = MlpModel::new(x.ncols(), schedule, &mut rng);
    validate_batch(model.input_dim(), x, r)?;

    let n = x.nrows();
    let batch = schedule.batch_size.min(n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut prev_loss = f64::INFINITY;
    let mut plateau = 0usize;

    for epoch in 0..schedule.phase1_max_epochs {
        shuffle(&mut order, &mut rng);
        let mut squared_error_sum = 0.0;
        for chunk in order.chunks(batch) {
            let xb = DMatrix::from_fn(chunk.len(), x.ncols(), |i, j| x[(chunk[i], j)]);
            let rb = DVector::from_fn(chunk.len(), |i, _| r[chunk[i]]);
            let mse = model.train_batch(&xb, &rb);
            squared_error_sum += mse * chunk.len() as f64;
        }
        let loss = squared_error_sum / n as f64;
        if !loss.is_finite() {
            return Err(RegressError::Numeric(format!(
                "training diverged at epoch {epoch}: loss {loss}"
            )));
        }
        let improvement = (prev_loss - loss) / prev_loss.abs().max(f64::MIN_POSITIVE);
        if improvement < CONVERGENCE_TOL {
            plateau += 1;
            if plateau >= CONVERGENCE_WINDOW {
                break;
            }
        } else {
            plateau = 0;
        }
        prev_loss = loss;
    }
    Ok(RewardModel::Mlp(model))
}

/// Fisher-Yates with the crate's seeded generator, so fitting stays
/// deterministic without depending on shuffle implementation details.
fn shuffle(order: &mut [usize], rng: &mut ChaCha8Rng) {
    for i in (1..order.len()).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
}

/// One pass of in-order mini-batch updates over a block of fresh samples.
/// An empty block leaves the model untouched.
pub fn update_mlp_online(model: &mut RewardModel, x: &DMatrix<f64>, r: &DVector<f64>) -> Result<()> {
    let mlp = match model {
        RewardModel::Mlp(m) => m,
        RewardModel::Linear(_) => {
            return Err(RegressError::Kind(
                "online updates require the neural model, got the linear one".into(),
            ))
        }
    };
    if x.nrows() == 0 {
        return Ok(());
    }
    validate_batch(mlp.input_dim(), x, r)?;
    let batch = mlp.batch_size.min(x.nrows());
    let rows: Vec<usize> = (0..x.nrows()).collect();
    for chunk in rows.chunks(batch) {
        let xb = DMatrix::from_fn(chunk.len(), x.ncols(), |i, j| x[(chunk[i], j)]);
        let rb = DVector::from_fn(chunk.len(), |i, _| r[chunk[i]]);
        let mse = mlp.train_batch(&xb, &rb);
        if !mse.is_finite() {
            return Err(RegressError::Numeric(format!("online update diverged: loss {mse}")));
        }
    }
    Ok(())
}
