use nalgebra::DMatrix;

use crate::buffer::{gae_advantages, RolloutBuffer};
use crate::error::Result;
use crate::nets::PolicyValueNets;
use crate::settings::PpoSettings;

/// Aggregate loss statistics of one policy/value update.
#[derive(Debug, Clone, Default)]
pub struct PpoDiagnostics {
    pub minibatches_run: usize,
    /// Minibatches abandoned because their loss was non-finite.
    pub minibatches_skipped: usize,
    pub mean_policy_loss: f64,
    pub mean_value_loss: f64,
    pub mean_entropy: f64,
    pub notes: Vec<String>,
}

/// Per-head softmax statistics at one sample.
struct HeadStats {
    probs: Vec<f64>,
    log_probs: Vec<f64>,
    entropy: f64,
}

fn head_stats(logits: &[f64]) -> HeadStats {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum_exp: f64 = logits.iter().map(|z| (z - max).exp()).sum();
    let lse = max + sum_exp.ln();
    let log_probs: Vec<f64> = logits.iter().map(|z| z - lse).collect();
    let probs: Vec<f64> = log_probs.iter().map(|lp| lp.exp()).collect();
    let entropy = -probs
        .iter()
        .zip(&log_probs)
        .map(|(p, lp)| if *p > 0.0 { p * lp } else { 0.0 })
        .sum::<f64>();
    HeadStats { probs, log_probs, entropy }
}

/// Runs `epochs_per_update` passes of shuffled minibatches over the rollout,
/// descending the clipped-surrogate policy loss plus `value_coeff` times the
/// value MSE minus `entropy_coeff` times the policy entropy. A minibatch
/// whose loss is non-finite is skipped (recorded in the diagnostics) and
/// training continues with the next one.
pub fn ppo_update(
    nets: &mut PolicyValueNets,
    buffer: &RolloutBuffer,
    settings: &PpoSettings,
) -> Result<PpoDiagnostics> {
    settings.validate()?;
    buffer.validate(nets)?;
    let k = buffer.len();

    let (mut advantages, returns) = gae_advantages(buffer, settings.discount, settings.gae_lambda);
    if settings.normalize_advantages && k > 1 {
        let mean = advantages.mean();
        advantages.add_scalar_mut(-mean);
        let std = (advantages.norm_squared() / k as f64).sqrt();
        if std > 1e-12 {
            advantages /= std;
        }
    }

    let minibatch = settings.minibatch.min(k);
    let mut order: Vec<usize> = (0..k).collect();
    let mut diag = PpoDiagnostics::default();
    let mut sums = (0.0, 0.0, 0.0);

    for _ in 0..settings.epochs_per_update {
        nets.shuffle(&mut order);
        let mut start = 0;
        while start < k {
            let chunk = &order[start..(start + minibatch).min(k)];
            start += minibatch;
            match minibatch_step(nets, buffer, &advantages, &returns, settings, chunk) {
                MinibatchOutcome::Applied { policy_loss, value_loss, entropy } => {
                    diag.minibatches_run += 1;
                    sums.0 += policy_loss;
                    sums.1 += value_loss;
                    sums.2 += entropy;
                }
                MinibatchOutcome::Skipped(reason) => {
                    diag.minibatches_skipped += 1;
                    if diag.notes.len() < 16 {
                        diag.notes.push(reason);
                    }
                }
            }
        }
    }
    if diag.minibatches_run > 0 {
        let n = diag.minibatches_run as f64;
        diag.mean_policy_loss = sums.0 / n;
        diag.mean_value_loss = sums.1 / n;
        diag.mean_entropy = sums.2 / n;
    }
    Ok(diag)
}

enum MinibatchOutcome {
    Applied { policy_loss: f64, value_loss: f64, entropy: f64 },
    Skipped(String),
}

fn minibatch_step(
    nets: &mut PolicyValueNets,
    buffer: &RolloutBuffer,
    advantages: &nalgebra::DVector<f64>,
    returns: &nalgebra::DVector<f64>,
    settings: &PpoSettings,
    chunk: &[usize],
) -> MinibatchOutcome {
    let nb = chunk.len();
    let d = buffer.observations.ncols();
    let obs = DMatrix::from_fn(nb, d, |r, c| buffer.observations[(chunk[r], c)]);

    let offsets = nets.head_offsets().to_vec();
    let cards = nets.action_cardinalities().to_vec();
    let total_logits: usize = cards.iter().sum();

    let (policy_inputs, logits) = nets.policy_net().forward(&obs);
    let (value_inputs, value_out) = nets.value_net().forward(&obs);

    let mut policy_delta = DMatrix::zeros(nb, total_logits);
    let mut value_delta = DMatrix::zeros(nb, 1);
    let mut policy_loss = 0.0;
    let mut value_loss = 0.0;
    let mut entropy_total = 0.0;
    let inv_nb = 1.0 / nb as f64;

    // Per-sample statistics retained for the gradient fill-in.
    let mut stats: Vec<Vec<HeadStats>> = Vec::with_capacity(nb);
    let mut grad_coeffs = vec![0.0; nb];

    for (r, &g) in chunk.iter().enumerate() {
        let valid = &buffer.valid_counts[g];
        let action = &buffer.actions[g];
        let mut new_log_prob = 0.0;
        let mut sample_entropy = 0.0;
        let mut heads = Vec::with_capacity(cards.len());
        for (h, &off) in offsets.iter().enumerate() {
            let slice: Vec<f64> = (0..valid[h]).map(|j| logits[(r, off + j)]).collect();
            let hs = head_stats(&slice);
            new_log_prob += hs.log_probs[action[h]];
            sample_entropy += hs.entropy;
            heads.push(hs);
        }
        stats.push(heads);
        entropy_total += sample_entropy;

        let adv = advantages[g];
        let ratio = (new_log_prob - buffer.log_probs[g]).exp();
        let surr1 = ratio * adv;
        let surr2 = ratio.clamp(1.0 - settings.clip, 1.0 + settings.clip) * adv;
        if surr1 <= surr2 {
            policy_loss -= surr1;
            grad_coeffs[r] = -adv * ratio;
        } else {
            policy_loss -= surr2;
            // The clamp is saturated here, so the ratio gradient vanishes.
            grad_coeffs[r] = 0.0;
        }

        let v = value_out[(r, 0)];
        let err = v - returns[g];
        value_loss += err * err;
        value_delta[(r, 0)] = 2.0 * settings.value_coeff * err * inv_nb;
    }

    policy_loss *= inv_nb;
    value_loss *= inv_nb;
    let mean_entropy = entropy_total * inv_nb;
    let total = policy_loss + settings.value_coeff * value_loss - settings.entropy_coeff * mean_entropy;
    if !total.is_finite() {
        return MinibatchOutcome::Skipped(format!(
            "non-finite minibatch loss (policy {policy_loss}, value {value_loss}, entropy {mean_entropy}); update skipped"
        ));
    }

    for (r, &g) in chunk.iter().enumerate() {
        let valid = &buffer.valid_counts[g];
        let action = &buffer.actions[g];
        let coeff = grad_coeffs[r] * inv_nb;
        for (h, &off) in offsets.iter().enumerate() {
            let hs = &stats[r][h];
            for j in 0..valid[h] {
                // ∂logp(a)/∂z_j = 1[j = a] − p_j.
                let onehot = if j == action[h] { 1.0 } else { 0.0 };
                let mut dz = coeff * (onehot - hs.probs[j]);
                if settings.entropy_coeff != 0.0 {
                    dz += settings.entropy_coeff
                        * inv_nb
                        * hs.probs[j]
                        * (hs.log_probs[j] + hs.entropy);
                }
                policy_delta[(r, off + j)] = dz;
            }
        }
    }

    let lr = settings.learning_rate;
    let (policy, value) = nets.nets_mut();
    policy.apply_gradient(&policy_inputs, policy_delta, lr);
    value.apply_gradient(&value_inputs, value_delta, lr);
    MinibatchOutcome::Applied { policy_loss, value_loss, entropy: mean_entropy }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    /// Buffer over one fixed observation with prescribed actions/rewards,
    /// zero values, and stored log-probabilities matching the (uniform
    /// zero-init) policy, so the first minibatch sees ratio = 1 exactly.
    fn bandit_buffer(
        obs_dim: usize,
        card: usize,
        actions: &[usize],
        rewards: &[f64],
    ) -> RolloutBuffer {
        let k = actions.len();
        let lp = (1.0 / card as f64).ln();
        RolloutBuffer {
            observations: DMatrix::from_element(k, obs_dim, 0.4),
            next_observations: DMatrix::from_element(k, obs_dim, 0.4),
            actions: actions.iter().map(|&a| vec![a]).collect(),
            action_values: DMatrix::zeros(k, 1),
            valid_counts: vec![vec![card]; k],
            log_probs: DVector::from_element(k, lp),
            rewards: DVector::from_row_slice(rewards),
            raw_rewards: DVector::from_row_slice(rewards),
            true_endo_rewards: DVector::zeros(k),
            values: DVector::zeros(k),
            dones: vec![true; k],
            bootstrap_value: 0.0,
        }
    }

    fn settings(clip: f64, epochs: usize, minibatch: usize, lr: f64) -> PpoSettings {
        PpoSettings {
            clip,
            epochs_per_update: epochs,
            minibatch,
            learning_rate: lr,
            ..PpoSettings::default()
        }
    }

    #[test]
    fn zero_learning_rate_leaves_the_networks_bitwise_unchanged() {
        let mut nets = PolicyValueNets::new(3, &[4], 0.0, 5).unwrap();
        let actions: Vec<usize> = (0..32).map(|i| i % 4).collect();
        let rewards: Vec<f64> = (0..32).map(|i| (i as f64 * 0.37).sin()).collect();
        let buf = bandit_buffer(3, 4, &actions, &rewards);
        let before = nets.weights_digest();
        let diag = ppo_update(&mut nets, &buf, &settings(0.2, 3, 8, 0.0)).unwrap();
        assert_eq!(nets.weights_digest(), before);
        assert_eq!(diag.minibatches_skipped, 0);
        assert!(diag.minibatches_run > 0);
        // The optimizer state still advances; only parameters stay put.
        assert!(nets.optimizer_steps().0 > 0);
    }

    #[test]
    fn zero_advantages_with_zero_entropy_weight_leave_the_policy_untouched() {
        let mut nets = PolicyValueNets::new(2, &[5], 1e-2, 9).unwrap();
        // Zero rewards and zero stored values make every advantage exactly 0.
        let actions: Vec<usize> = (0..20).map(|i| i % 5).collect();
        let buf = bandit_buffer(2, 5, &actions, &vec![0.0; 20]);
        let policy_before = nets.policy_digest();
        let value_before = nets.weights_digest();
        ppo_update(&mut nets, &buf, &settings(0.2, 2, 10, 1e-2)).unwrap();
        assert_eq!(nets.policy_digest(), policy_before);
        // The value network trains toward the zero returns, so it must move.
        assert_ne!(nets.weights_digest(), value_before);
    }

    #[test]
    fn unit_ratio_single_epoch_is_clip_invariant() {
        // With stored log-probs equal to the current policy's and a single
        // full-batch epoch, the ratio is exactly 1, the clamp never binds,
        // and the step reduces to a vanilla policy-gradient update: any clip
        // radius gives the identical result.
        let actions: Vec<usize> = (0..24).map(|i| i % 3).collect();
        let rewards: Vec<f64> = actions.iter().map(|&a| if a == 1 { 1.0 } else { -0.5 }).collect();
        let buf = bandit_buffer(2, 3, &actions, &rewards);
        let mut tight = PolicyValueNets::new(2, &[3], 1e-2, 33).unwrap();
        let mut huge = tight.clone();
        ppo_update(&mut tight, &buf, &settings(0.2, 1, 24, 1e-2)).unwrap();
        ppo_update(&mut huge, &buf, &settings(1e12, 1, 24, 1e-2)).unwrap();
        assert_eq!(tight.weights_digest(), huge.weights_digest());
    }

    #[test]
    fn rewarded_actions_gain_probability() {
        let mut nets = PolicyValueNets::new(2, &[4], 1e-2, 13).unwrap();
        let obs = DVector::from_row_slice(&[0.4, 0.4]);
        let before = nets.distributions(&obs, &[4]).unwrap()[0][2];
        let actions: Vec<usize> = (0..64).map(|i| i % 4).collect();
        let rewards: Vec<f64> = actions.iter().map(|&a| if a == 2 { 1.0 } else { 0.0 }).collect();
        let buf = bandit_buffer(2, 4, &actions, &rewards);
        for _ in 0..5 {
            ppo_update(&mut nets, &buf, &settings(0.2, 4, 16, 1e-2)).unwrap();
        }
        let after = nets.distributions(&obs, &[4]).unwrap()[0][2];
        assert!(
            after > before + 0.1,
            "rewarded action probability should rise: {before} -> {after}"
        );
    }

    #[test]
    fn entropy_bonus_pushes_a_peaked_policy_toward_uniform() {
        let mut nets = PolicyValueNets::new(2, &[4], 1e-2, 21).unwrap();
        let obs = DVector::from_row_slice(&[0.4, 0.4]);
        let actions: Vec<usize> = (0..64).map(|i| i % 4).collect();
        let rewards: Vec<f64> = actions.iter().map(|&a| if a == 0 { 1.0 } else { 0.0 }).collect();
        let peak_buf = bandit_buffer(2, 4, &actions, &rewards);
        for _ in 0..8 {
            ppo_update(&mut nets, &peak_buf, &settings(0.2, 4, 16, 1e-2)).unwrap();
        }
        let entropy_of = |nets: &PolicyValueNets| {
            let d = &nets.distributions(&obs, &[4]).unwrap()[0];
            -d.iter().filter(|p| **p > 0.0).map(|p| p * p.ln()).sum::<f64>()
        };
        let peaked = entropy_of(&nets);
        assert!(peaked < 1.2, "peaking setup failed, entropy {peaked}");

        // Zero advantages isolate the entropy term.
        let flat_buf = bandit_buffer(2, 4, &actions, &vec![0.0; 64]);
        let mut with_bonus = settings(0.2, 4, 16, 1e-2);
        with_bonus.entropy_coeff = 0.05;
        for _ in 0..8 {
            ppo_update(&mut nets, &flat_buf, &with_bonus).unwrap();
        }
        let relaxed = entropy_of(&nets);
        assert!(
            relaxed > peaked + 0.05,
            "entropy bonus should loosen the policy: {peaked} -> {relaxed}"
        );
    }

    #[test]
    fn non_finite_rewards_skip_every_minibatch_and_leave_nets_unchanged() {
        let mut nets = PolicyValueNets::new(2, &[3], 1e-2, 40).unwrap();
        let actions: Vec<usize> = (0..12).map(|i| i % 3).collect();
        let mut rewards = vec![0.5; 12];
        rewards[7] = f64::NAN;
        let buf = bandit_buffer(2, 3, &actions, &rewards);
        let before = nets.weights_digest();
        let diag = ppo_update(&mut nets, &buf, &settings(0.2, 2, 12, 1e-2)).unwrap();
        assert_eq!(diag.minibatches_run, 0);
        assert_eq!(diag.minibatches_skipped, 2);
        assert!(!diag.notes.is_empty());
        assert_eq!(nets.weights_digest(), before);
    }

    #[test]
    fn masked_logits_receive_no_gradient() {
        // Two states with different valid prefixes of a 5-way head: the
        // never-valid fifth logit's weights must stay exactly at zero init.
        let mut nets = PolicyValueNets::new(2, &[5], 1e-2, 55).unwrap();
        let k = 30;
        let actions: Vec<usize> = (0..k).map(|i| i % 3).collect();
        let rewards: Vec<f64> = (0..k).map(|i| ((i * 7 % 5) as f64) - 2.0).collect();
        let mut buf = bandit_buffer(2, 5, &actions, &rewards);
        for vc in buf.valid_counts.iter_mut() {
            vc[0] = 3;
        }
        let lp = (1.0_f64 / 3.0).ln();
        buf.log_probs = DVector::from_element(k, lp);
        ppo_update(&mut nets, &buf, &settings(0.2, 3, 10, 1e-2)).unwrap();
        let probs_full = nets.distributions(&DVector::from_row_slice(&[0.4, 0.4]), &[5]).unwrap();
        // With the masked entries untrained, logits 3 and 4 keep the zero
        // output-layer bias relative to each other.
        assert_eq!(probs_full[0][3], probs_full[0][4]);
    }
}
