use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
/// Moment-estimate damping used by common PPO implementations (larger than
/// the usual 1e-8 regression default).
const ADAM_EPS: f64 = 1e-5;

/// Fully connected network with hyperbolic-tangent hidden layers, a linear
/// output layer, and adaptive-moment optimizer state.
#[derive(Debug, Clone)]
pub(crate) struct TanhMlp {
    weights: Vec<DMatrix<f64>>,
    biases: Vec<DVector<f64>>,
    m_w: Vec<DMatrix<f64>>,
    v_w: Vec<DMatrix<f64>>,
    m_b: Vec<DVector<f64>>,
    v_b: Vec<DVector<f64>>,
    step: u64,
}

impl TanhMlp {
    /// `dims` lists layer widths input-first. With `zero_output_layer` the
    /// final layer starts at exactly zero (used by the policy so the initial
    /// action distribution is exactly uniform); hidden layers are always
    /// uniform fan-in initialized.
    pub fn new(dims: &[usize], zero_output_layer: bool, rng: &mut ChaCha8Rng) -> Self {
        assert!(dims.len() >= 2, "network needs at least input and output widths");
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        let last = dims.len() - 2;
        for (i, pair) in dims.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            if zero_output_layer && i == last {
                weights.push(DMatrix::zeros(fan_out, fan_in));
                biases.push(DVector::zeros(fan_out));
                continue;
            }
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
        Self { weights, biases, m_w, v_w, m_b, v_b, step: 0 }
    }

    pub fn optimizer_step(&self) -> u64 {
        self.step
    }

    /// Forward pass over a batch (rows are samples). Returns the input
    /// activation of every layer (needed for backpropagation) plus the
    /// linear outputs, one row per sample.
    pub fn forward(&self, x: &DMatrix<f64>) -> (Vec<DMatrix<f64>>, DMatrix<f64>) {
        let mut inputs = Vec::with_capacity(self.weights.len());
        let mut cur = x.clone();
        for (i, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = &cur * w.transpose();
            for mut row in z.row_iter_mut() {
                row += b.transpose();
            }
            if i + 1 < self.weights.len() {
                z.apply(|v| *v = v.tanh());
            }
            inputs.push(cur);
            cur = z;
        }
        (inputs, cur)
    }

    pub fn output(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.forward(x).1
    }

    /// Backpropagates `delta` = ∂loss/∂output (rows matching the forward
    /// batch) through the cached activations.
    pub fn gradients(
        &self,
        inputs: &[DMatrix<f64>],
        delta_out: DMatrix<f64>,
    ) -> (Vec<DMatrix<f64>>, Vec<DVector<f64>>) {
        let mut grad_w = Vec::with_capacity(self.weights.len());
        let mut grad_b = Vec::with_capacity(self.weights.len());
        let mut delta = delta_out;
        for layer in (0..self.weights.len()).rev() {
            let a_prev = &inputs[layer];
            grad_w.push(delta.transpose() * a_prev);
            grad_b.push(delta.row_sum().transpose());
            if layer > 0 {
                let mut back = &delta * &self.weights[layer];
                // The cached layer input is the previous layer's tanh output,
                // so the activation derivative is available as 1 − a².
                back.zip_apply(a_prev, |b, a| *b *= 1.0 - a * a);
                delta = back;
            }
        }
        grad_w.reverse();
        grad_b.reverse();
        (grad_w, grad_b)
    }

    /// One adaptive-moment step. Moment accumulators and the step counter
    /// always advance; parameters move only when `lr` is nonzero, so a zero
    /// learning rate leaves every weight bitwise untouched.
    pub fn adam_apply(&mut self, grad_w: &[DMatrix<f64>], grad_b: &[DVector<f64>], lr: f64) {
        self.step += 1;
        let bc1 = 1.0 - BETA1.powi(self.step.min(i32::MAX as u64) as i32);
        let bc2 = 1.0 - BETA2.powi(self.step.min(i32::MAX as u64) as i32);
        for i in 0..self.weights.len() {
            update_tensor(
                self.weights[i].as_mut_slice(),
                self.m_w[i].as_mut_slice(),
                self.v_w[i].as_mut_slice(),
                grad_w[i].as_slice(),
                lr,
                bc1,
                bc2,
            );
            update_tensor(
                self.biases[i].as_mut_slice(),
                self.m_b[i].as_mut_slice(),
                self.v_b[i].as_mut_slice(),
                grad_b[i].as_slice(),
                lr,
                bc1,
                bc2,
            );
        }
    }

    pub fn apply_gradient(
        &mut self,
        inputs: &[DMatrix<f64>],
        delta_out: DMatrix<f64>,
        lr: f64,
    ) {
        let (gw, gb) = self.gradients(inputs, delta_out);
        self.adam_apply(&gw, &gb, lr);
    }

    /// Exact textual rendering of every parameter, for bitwise-equality
    /// assertions (the default float formatting round-trips f64).
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            for v in w.iter() {
                out.push_str(&format!("{v} "));
            }
            for v in b.iter() {
                out.push_str(&format!("{v} "));
            }
            out.push('\n');
        }
        out
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
        if lr != 0.0 {
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            theta[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    fn net(dims: &[usize], zero_last: bool, seed: u64) -> TanhMlp {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        TanhMlp::new(dims, zero_last, &mut rng)
    }

    #[test]
    fn forward_produces_batch_rows_and_zero_init_outputs() {
        let nn = net(&[3, 8, 4], true, 7);
        let x = DMatrix::from_fn(5, 3, |r, c| (r * 3 + c) as f64 * 0.1);
        let y = nn.output(&x);
        assert_eq!((y.nrows(), y.ncols()), (5, 4));
        assert!(y.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn gradients_match_central_differences() {
        let mut nn = net(&[2, 5, 3], false, 11);
        let x = DMatrix::from_row_slice(4, 2, &[0.3, -1.2, 0.8, 0.1, -0.5, 0.9, 1.4, -0.7]);
        // Scalar probe loss: a fixed linear functional of the outputs.
        let coef = DMatrix::from_fn(4, 3, |r, c| ((r + 2 * c) as f64).sin());
        let loss = |nn: &TanhMlp| (nn.output(&x).component_mul(&coef)).sum();

        let (inputs, _) = nn.forward(&x);
        let (gw, gb) = nn.gradients(&inputs, coef.clone());

        let h = 1e-6;
        for layer in 0..2 {
            for idx in 0..nn.weights[layer].len() {
                let orig = nn.weights[layer].as_slice()[idx];
                nn.weights[layer].as_mut_slice()[idx] = orig + h;
                let up = loss(&nn);
                nn.weights[layer].as_mut_slice()[idx] = orig - h;
                let down = loss(&nn);
                nn.weights[layer].as_mut_slice()[idx] = orig;
                let numeric = (up - down) / (2.0 * h);
                assert_relative_eq!(gw[layer].as_slice()[idx], numeric, epsilon = 1e-6);
            }
            for idx in 0..nn.biases[layer].len() {
                let orig = nn.biases[layer][idx];
                nn.biases[layer][idx] = orig + h;
                let up = loss(&nn);
                nn.biases[layer][idx] = orig - h;
                let down = loss(&nn);
                nn.biases[layer][idx] = orig;
                let numeric = (up - down) / (2.0 * h);
                assert_relative_eq!(gb[layer][idx], numeric, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn zero_learning_rate_advances_moments_but_not_weights() {
        let mut nn = net(&[2, 4, 1], false, 3);
        let before = nn.dump();
        let x = DMatrix::from_row_slice(2, 2, &[0.5, -0.25, 1.0, 0.75]);
        let (inputs, _) = nn.forward(&x);
        nn.apply_gradient(&inputs, DMatrix::from_element(2, 1, 1.0), 0.0);
        assert_eq!(nn.dump(), before);
        assert_eq!(nn.optimizer_step(), 1);
    }

    #[test]
    fn descent_reduces_a_quadratic_probe_loss() {
        let mut nn = net(&[1, 6, 1], false, 5);
        let x = DMatrix::from_row_slice(8, 1, &[-1.0, -0.7, -0.4, -0.1, 0.2, 0.5, 0.8, 1.1]);
        let target = x.map(|v| v * v);
        let loss_of = |nn: &TanhMlp| {
            let y = nn.output(&x);
            (&y - &target).norm_squared() / 8.0
        };
        let first = loss_of(&nn);
        for _ in 0..1500 {
            let (inputs, y) = nn.forward(&x);
            let delta = (&y - &target) * (2.0 / 8.0);
            nn.apply_gradient(&inputs, delta, 3e-3);
        }
        let last = loss_of(&nn);
        assert!(
            last < 0.02 * first,
            "quadratic probe failed to train: {first} -> {last}"
        );
    }
}
