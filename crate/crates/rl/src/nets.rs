use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, RlError};
use crate::net::TanhMlp;

/// Width of both hidden layers in the policy and value networks.
pub const HIDDEN_WIDTH: usize = 64;

/// Stream separator so action sampling is decoupled from weight init.
const SAMPLING_STREAM: u64 = 0x517E_EDAC;

/// Actor-critic pair: a policy network emitting one categorical head per
/// action variable and a scalar value network, each with its own
/// adaptive-moment optimizer state and a shared sampling RNG.
///
/// Heads are masked per state: when the environment reports that only the
/// first `k` choices of a variable are valid, the remaining logits are
/// excluded from the softmax and receive zero probability.
#[derive(Debug, Clone)]
pub struct PolicyValueNets {
    policy: TanhMlp,
    value: TanhMlp,
    action_cards: Vec<usize>,
    head_offsets: Vec<usize>,
    observation_dim: usize,
    learning_rate: f64,
    rng: ChaCha8Rng,
}

impl PolicyValueNets {
    /// Fresh actor-critic for `observation_dim` inputs and one categorical
    /// head per entry of `action_cardinalities`. The policy's output layer is
    /// zero-initialized so the initial policy is exactly uniform over every
    /// valid action.
    pub fn new(
        observation_dim: usize,
        action_cardinalities: &[usize],
        learning_rate: f64,
        seed: u64,
    ) -> Result<Self> {
        if observation_dim == 0 {
            return Err(RlError::InvalidParam("observation dimension must be positive".into()));
        }
        if action_cardinalities.is_empty() {
            return Err(RlError::InvalidParam("at least one action variable is required".into()));
        }
        if action_cardinalities.iter().any(|&c| c == 0) {
            return Err(RlError::InvalidParam("action cardinalities must be positive".into()));
        }
        if !(learning_rate.is_finite() && learning_rate >= 0.0) {
            return Err(RlError::InvalidParam(format!(
                "learning rate must be finite and non-negative, got {learning_rate}"
            )));
        }
        let total: usize = action_cardinalities.iter().sum();
        let mut head_offsets = Vec::with_capacity(action_cardinalities.len());
        let mut acc = 0;
        for &c in action_cardinalities {
            head_offsets.push(acc);
            acc += c;
        }
        let mut init_rng = ChaCha8Rng::seed_from_u64(seed);
        let policy = TanhMlp::new(
            &[observation_dim, HIDDEN_WIDTH, HIDDEN_WIDTH, total],
            true,
            &mut init_rng,
        );
        let value = TanhMlp::new(
            &[observation_dim, HIDDEN_WIDTH, HIDDEN_WIDTH, 1],
            false,
            &mut init_rng,
        );
        Ok(Self {
            policy,
            value,
            action_cards: action_cardinalities.to_vec(),
            head_offsets,
            observation_dim,
            learning_rate,
            rng: ChaCha8Rng::seed_from_u64(seed ^ SAMPLING_STREAM),
        })
    }

    pub fn observation_dim(&self) -> usize {
        self.observation_dim
    }

    pub fn action_cardinalities(&self) -> &[usize] {
        &self.action_cards
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub(crate) fn policy_net(&self) -> &TanhMlp {
        &self.policy
    }

    pub(crate) fn value_net(&self) -> &TanhMlp {
        &self.value
    }

    pub(crate) fn nets_mut(&mut self) -> (&mut TanhMlp, &mut TanhMlp) {
        (&mut self.policy, &mut self.value)
    }

    pub(crate) fn head_offsets(&self) -> &[usize] {
        &self.head_offsets
    }

    pub(crate) fn shuffle(&mut self, indices: &mut [usize]) {
        for i in (1..indices.len()).rev() {
            let j = self.rng.random_range(0..=i);
            indices.swap(i, j);
        }
    }

    fn check_valid(&self, valid: &[usize]) -> Result<()> {
        if valid.len() != self.action_cards.len() {
            return Err(RlError::Dimension(format!(
                "{} action variables, got {} valid counts",
                self.action_cards.len(),
                valid.len()
            )));
        }
        for (head, (&v, &c)) in valid.iter().zip(&self.action_cards).enumerate() {
            if v == 0 || v > c {
                return Err(RlError::InvalidParam(format!(
                    "valid count {v} for action variable {head} outside 1..={c}"
                )));
            }
        }
        Ok(())
    }

    /// Masked per-head categorical distributions at one observation.
    pub fn distributions(&self, obs: &DVector<f64>, valid: &[usize]) -> Result<Vec<DVector<f64>>> {
        if obs.len() != self.observation_dim {
            return Err(RlError::Dimension(format!(
                "observation has {} entries, network consumes {}",
                obs.len(),
                self.observation_dim
            )));
        }
        self.check_valid(valid)?;
        let row = DMatrix::from_row_slice(1, obs.len(), obs.as_slice());
        let logits = self.policy.output(&row);
        let mut dists = Vec::with_capacity(self.action_cards.len());
        for (head, &card) in self.action_cards.iter().enumerate() {
            let off = self.head_offsets[head];
            let mut probs = DVector::zeros(card);
            masked_softmax(
                &(0..valid[head]).map(|j| logits[(0, off + j)]).collect::<Vec<_>>(),
                probs.as_mut_slice(),
            );
            dists.push(probs);
        }
        Ok(dists)
    }

    /// Samples one action per head with an explicit RNG, leaving the
    /// networks' own sampling stream untouched (used by the frozen-policy
    /// evaluator). Returns the action and its joint log-probability.
    pub fn sample_action_with(
        &self,
        rng: &mut ChaCha8Rng,
        obs: &DVector<f64>,
        valid: &[usize],
    ) -> Result<(Vec<usize>, f64)> {
        let dists = self.distributions(obs, valid)?;
        let mut action = Vec::with_capacity(dists.len());
        let mut log_prob = 0.0;
        for (head, probs) in dists.iter().enumerate() {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut chosen = valid[head] - 1;
            for j in 0..valid[head] {
                acc += probs[j];
                if u < acc {
                    chosen = j;
                    break;
                }
            }
            action.push(chosen);
            log_prob += probs[chosen].ln();
        }
        Ok((action, log_prob))
    }

    /// Samples from the internal stream (training rollouts).
    pub fn sample_action(&mut self, obs: &DVector<f64>, valid: &[usize]) -> Result<(Vec<usize>, f64)> {
        let dists = self.distributions(obs, valid)?;
        let mut action = Vec::with_capacity(dists.len());
        let mut log_prob = 0.0;
        for (head, probs) in dists.iter().enumerate() {
            let u: f64 = self.rng.random();
            let mut acc = 0.0;
            let mut chosen = valid[head] - 1;
            for j in 0..valid[head] {
                acc += probs[j];
                if u < acc {
                    chosen = j;
                    break;
                }
            }
            action.push(chosen);
            log_prob += probs[chosen].ln();
        }
        Ok((action, log_prob))
    }

    /// State value estimate at one observation.
    pub fn value(&self, obs: &DVector<f64>) -> f64 {
        let row = DMatrix::from_row_slice(1, obs.len(), obs.as_slice());
        self.value.output(&row)[(0, 0)]
    }

    pub fn value_batch(&self, obs: &DMatrix<f64>) -> DVector<f64> {
        self.value.output(obs).column(0).into_owned()
    }

    /// Exact textual rendering of every parameter in both networks, for
    /// bitwise no-op assertions.
    pub fn weights_digest(&self) -> String {
        format!("policy\n{}value\n{}", self.policy.dump(), self.value.dump())
    }

    pub fn policy_digest(&self) -> String {
        self.policy.dump()
    }

    /// (policy, value) optimizer step counters.
    pub fn optimizer_steps(&self) -> (u64, u64) {
        (self.policy.optimizer_step(), self.value.optimizer_step())
    }
}

/// Numerically stable softmax of `logits` written into the first
/// `logits.len()` slots of `out` (the rest stay zero).
pub(crate) fn masked_softmax(logits: &[f64], out: &mut [f64]) {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (j, &z) in logits.iter().enumerate() {
        let e = (z - max).exp();
        out[j] = e;
        sum += e;
    }
    for v in out[..logits.len()].iter_mut() {
        *v /= sum;
    }
}
