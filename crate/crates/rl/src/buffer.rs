use envs::{Environment, StepOutcome};
use nalgebra::{DMatrix, DVector};

use crate::error::{Result, RlError};
use crate::nets::PolicyValueNets;

/// Maps a transition to the reward the learner is trained on. Arguments are
/// the observation in which the action was taken and the full step outcome.
pub type RewardTransform<'a> = &'a dyn Fn(&DVector<f64>, &StepOutcome) -> f64;

/// One logged transition, before batching.
#[derive(Debug, Clone)]
pub(crate) struct StepRecord {
    pub obs: DVector<f64>,
    pub next_obs: DVector<f64>,
    pub action: Vec<usize>,
    pub action_values: Vec<f64>,
    pub valid: Vec<usize>,
    pub log_prob: f64,
    pub raw_reward: f64,
    pub stored_reward: f64,
    pub true_endo_reward: f64,
    pub value: f64,
    pub done: bool,
}

/// Samples one action from the current policy, advances the environment, and
/// logs the transition. `current_obs` tracks the environment's live state
/// across calls; terminal steps reset the environment and leave the fresh
/// initial observation there.
pub(crate) fn sample_step<E: Environment>(
    nets: &mut PolicyValueNets,
    env: &mut E,
    current_obs: &mut DVector<f64>,
    transform: Option<RewardTransform>,
) -> Result<StepRecord> {
    let valid = env.valid_action_counts();
    let (action, log_prob) = nets.sample_action(current_obs, &valid)?;
    let value = nets.value(current_obs);
    let outcome = env.step(&action)?;
    let action_values = action
        .iter()
        .enumerate()
        .map(|(var, &idx)| env.action_value(var, idx))
        .collect();
    let stored_reward = match transform {
        Some(f) => f(current_obs, &outcome),
        None => outcome.reward,
    };
    let obs = std::mem::replace(
        current_obs,
        if outcome.terminal { env.reset() } else { outcome.observation.clone() },
    );
    Ok(StepRecord {
        obs,
        next_obs: outcome.observation,
        action,
        action_values,
        valid,
        log_prob,
        raw_reward: outcome.reward,
        stored_reward,
        true_endo_reward: outcome.reward_parts.r_end,
        value,
        done: outcome.terminal,
    })
}

/// A batch of consecutive transitions plus the value bootstrap for the state
/// following the last one. `rewards` is the training stream (transformed when
/// a transform was installed); `raw_rewards` and `true_endo_rewards` are
/// retained untouched for consistency checks and diagnostics only.
#[derive(Debug, Clone)]
pub struct RolloutBuffer {
    pub observations: DMatrix<f64>,
    pub next_observations: DMatrix<f64>,
    pub actions: Vec<Vec<usize>>,
    pub action_values: DMatrix<f64>,
    pub valid_counts: Vec<Vec<usize>>,
    pub log_probs: DVector<f64>,
    pub rewards: DVector<f64>,
    pub raw_rewards: DVector<f64>,
    pub true_endo_rewards: DVector<f64>,
    pub values: DVector<f64>,
    pub dones: Vec<bool>,
    /// Value estimate of the state after the final transition (ignored by
    /// the advantage recursion when that transition was terminal).
    pub bootstrap_value: f64,
}

impl RolloutBuffer {
    pub(crate) fn from_records(records: Vec<StepRecord>, bootstrap_value: f64) -> Self {
        let k = records.len();
        let d = records.first().map_or(0, |r| r.obs.len());
        let l = records.first().map_or(0, |r| r.action.len());
        let mut observations = DMatrix::zeros(k, d);
        let mut next_observations = DMatrix::zeros(k, d);
        let mut action_values = DMatrix::zeros(k, l);
        let mut actions = Vec::with_capacity(k);
        let mut valid_counts = Vec::with_capacity(k);
        let mut log_probs = DVector::zeros(k);
        let mut rewards = DVector::zeros(k);
        let mut raw_rewards = DVector::zeros(k);
        let mut true_endo_rewards = DVector::zeros(k);
        let mut values = DVector::zeros(k);
        let mut dones = Vec::with_capacity(k);
        for (i, rec) in records.into_iter().enumerate() {
            observations.row_mut(i).copy_from(&rec.obs.transpose());
            next_observations.row_mut(i).copy_from(&rec.next_obs.transpose());
            for (j, v) in rec.action_values.iter().enumerate() {
                action_values[(i, j)] = *v;
            }
            actions.push(rec.action);
            valid_counts.push(rec.valid);
            log_probs[i] = rec.log_prob;
            rewards[i] = rec.stored_reward;
            raw_rewards[i] = rec.raw_reward;
            true_endo_rewards[i] = rec.true_endo_reward;
            values[i] = rec.value;
            dones.push(rec.done);
        }
        Self {
            observations,
            next_observations,
            actions,
            action_values,
            valid_counts,
            log_probs,
            rewards,
            raw_rewards,
            true_endo_rewards,
            values,
            dones,
            bootstrap_value,
        }
    }

    pub fn len(&self) -> usize {
        self.dones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dones.is_empty()
    }

    pub(crate) fn validate(&self, nets: &PolicyValueNets) -> Result<()> {
        if self.is_empty() {
            return Err(RlError::InvalidParam("rollout buffer is empty".into()));
        }
        if self.observations.ncols() != nets.observation_dim() {
            return Err(RlError::Dimension(format!(
                "buffer observations have {} columns, networks consume {}",
                self.observations.ncols(),
                nets.observation_dim()
            )));
        }
        let k = self.len();
        if self.observations.nrows() != k
            || self.log_probs.len() != k
            || self.rewards.len() != k
            || self.values.len() != k
            || self.actions.len() != k
            || self.valid_counts.len() != k
        {
            return Err(RlError::Dimension("rollout buffer fields disagree on length".into()));
        }
        Ok(())
    }
}

/// Runs the current (sampled, evolving) policy for `steps` transitions and
/// returns the logged batch with its terminal value bootstrap. `current_obs`
/// must hold the environment's live observation and is left at the state
/// following the final logged transition.
pub fn collect_rollout<E: Environment>(
    nets: &mut PolicyValueNets,
    env: &mut E,
    current_obs: &mut DVector<f64>,
    steps: usize,
    reward_transform: Option<RewardTransform>,
) -> Result<RolloutBuffer> {
    if steps == 0 {
        return Err(RlError::InvalidParam("rollout length must be positive".into()));
    }
    let mut records = Vec::with_capacity(steps);
    for _ in 0..steps {
        records.push(sample_step(nets, env, current_obs, reward_transform)?);
    }
    let bootstrap_value = nets.value(current_obs);
    Ok(RolloutBuffer::from_records(records, bootstrap_value))
}

/// Generalized advantage estimation over a completed buffer. Returns the raw
/// (unnormalized) advantages and the value targets `advantages + values`;
/// per-update normalization is the policy updater's concern.
pub fn gae_advantages(buffer: &RolloutBuffer, gamma: f64, lambda: f64) -> (DVector<f64>, DVector<f64>) {
    let k = buffer.len();
    let mut advantages = DVector::zeros(k);
    let mut carry = 0.0;
    for t in (0..k).rev() {
        let not_done = if buffer.dones[t] { 0.0 } else { 1.0 };
        let next_value = if t + 1 < k { buffer.values[t + 1] } else { buffer.bootstrap_value };
        let delta = buffer.rewards[t] + gamma * next_value * not_done - buffer.values[t];
        carry = delta + gamma * lambda * not_done * carry;
        advantages[t] = carry;
    }
    let returns = &advantages + &buffer.values;
    (advantages, returns)
}
