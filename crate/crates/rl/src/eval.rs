use envs::Environment;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, RlError};
use crate::nets::PolicyValueNets;

/// Mean per-step raw environment reward of the frozen policy over `steps`
/// transitions. Action sampling is driven entirely by `seed`, and the
/// environment should be a fresh instance, so a fixed policy always produces
/// the identical mean — evaluations are comparable across the whole run.
pub fn evaluate_policy<E: Environment>(
    nets: &PolicyValueNets,
    env: &mut E,
    steps: usize,
    seed: u64,
) -> Result<f64> {
    if steps == 0 {
        return Err(RlError::InvalidParam("evaluation length must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut obs = env.reset();
    let mut total = 0.0;
    for _ in 0..steps {
        let valid = env.valid_action_counts();
        let (action, _) = nets.sample_action_with(&mut rng, &obs, &valid)?;
        let outcome = env.step(&action)?;
        total += outcome.reward;
        obs = if outcome.terminal { env.reset() } else { outcome.observation };
    }
    Ok(total / steps as f64)
}
