use std::collections::HashMap;

use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{EnvError, Result};
use crate::{Environment, RewardParts, StepOutcome};

/// Nodes in the road network.
pub const NODES: usize = 9;
/// Independent continuous exogenous covariates (traffic, weather, …).
pub const EXO_VARS: usize = 4;

/// Rightward successor lists; the action at a node is an index into its list.
const SUCCESSORS: [&[usize]; NODES] = [
    &[1, 2, 4], // v0
    &[4, 5],    // v1
    &[3, 4],    // v2
    &[6, 7],    // v3
    &[5, 6, 8], // v4
    &[8],       // v5
    &[7],       // v6
    &[8],       // v7
    &[],        // v8 (terminal)
];

/// Transition distributions in stochastic mode: `STOCHASTIC[node][action]`
/// gives probabilities over that node's successor list.
const STOCHASTIC: [&[&[f64]]; NODES] = [
    &[&[0.5, 0.3, 0.2], &[0.3, 0.5, 0.2], &[0.3, 0.2, 0.5]], // v0
    &[&[0.6, 0.4], &[0.5, 0.5]],                             // v1
    &[&[0.5, 0.5], &[0.3, 0.7]],                             // v2
    &[&[0.7, 0.3], &[0.4, 0.6]],                             // v3
    &[&[0.6, 0.2, 0.2], &[0.0, 1.0, 0.0], &[0.3, 0.2, 0.5]], // v4
    &[&[1.0]],                                               // v5
    &[&[1.0]],                                               // v6
    &[&[1.0]],                                               // v7
    &[],                                                     // v8
];

/// Traversal costs for the network. The shape of the graph is fixed; the
/// costs are chosen so the cheapest route is not the fewest-hop route, and
/// they can be overridden per edge.
pub fn default_edge_costs() -> HashMap<(usize, usize), f64> {
    [
        ((0, 1), 2.0),
        ((0, 2), 1.0),
        ((0, 4), 4.0),
        ((1, 4), 1.0),
        ((1, 5), 3.0),
        ((2, 3), 2.0),
        ((2, 4), 2.0),
        ((3, 6), 1.0),
        ((3, 7), 3.0),
        ((4, 5), 1.0),
        ((4, 6), 2.0),
        ((4, 8), 5.0),
        ((5, 8), 2.0),
        ((6, 7), 1.0),
        ((7, 8), 1.0),
    ]
    .into_iter()
    .collect()
}

#[derive(Debug, Clone)]
pub struct RoutingMdpConfig {
    pub edge_costs: HashMap<(usize, usize), f64>,
    /// Deterministic edge-following, or the fixed stochastic transition table.
    pub stochastic: bool,
    /// Per-step decay of each exogenous covariate.
    pub exo_decay: f64,
    pub exo_noise_std: f64,
    pub seed: u64,
}

impl RoutingMdpConfig {
    pub fn new(stochastic: bool, seed: u64) -> Self {
        Self {
            edge_costs: default_edge_costs(),
            stochastic,
            exo_decay: 0.9,
            exo_noise_std: 1.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (node, successors) in SUCCESSORS.iter().enumerate() {
            for &next in *successors {
                match self.edge_costs.get(&(node, next)) {
                    Some(c) if *c > 0.0 && c.is_finite() => {}
                    Some(c) => {
                        return Err(EnvError::Config(format!(
                            "edge v{node}→v{next} must have a positive cost, got {c}"
                        )))
                    }
                    None => {
                        return Err(EnvError::Config(format!(
                            "missing cost for edge v{node}→v{next}"
                        )))
                    }
                }
            }
        }
        if !self.exo_decay.is_finite() || self.exo_noise_std < 0.0 {
            return Err(EnvError::Config("invalid exogenous process parameters".into()));
        }
        Ok(())
    }
}

/// Episodic routing MDP: navigate from `v0` to the terminal `v8` along
/// rightward edges, minimizing traversal cost, while four exogenous
/// covariates drift independently of the agent and subtract from the reward.
/// Episodes end within 5 steps (the longest rightward path). The covariates
/// persist across episodes; `reset` only returns the agent to `v0`.
pub struct RoutingMdp {
    config: RoutingMdpConfig,
    node: usize,
    exo: DVector<f64>,
    rng: ChaCha8Rng,
    cardinalities: Vec<usize>,
}

impl RoutingMdp {
    pub fn new(config: RoutingMdpConfig) -> Result<Self> {
        config.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Ok(Self {
            config,
            node: 0,
            exo: DVector::zeros(EXO_VARS),
            rng,
            cardinalities: vec![3],
        })
    }

    fn observation(&self) -> DVector<f64> {
        let mut obs = DVector::zeros(NODES + EXO_VARS);
        obs[self.node] = 1.0;
        for i in 0..EXO_VARS {
            obs[NODES + i] = self.exo[i];
        }
        obs
    }

    pub fn current_node(&self) -> usize {
        self.node
    }

    pub fn exo_state(&self) -> &DVector<f64> {
        &self.exo
    }

    pub fn is_terminal(&self) -> bool {
        self.node == NODES - 1
    }
}

impl Environment for RoutingMdp {
    fn observation_dim(&self) -> usize {
        NODES + EXO_VARS
    }

    fn action_cardinalities(&self) -> &[usize] {
        &self.cardinalities
    }

    fn valid_action_counts(&self) -> Vec<usize> {
        vec![SUCCESSORS[self.node].len().max(1)]
    }

    fn reset(&mut self) -> DVector<f64> {
        self.node = 0;
        self.observation()
    }

    fn step(&mut self, action: &[usize]) -> Result<StepOutcome> {
        if self.is_terminal() {
            return Err(EnvError::InvalidAction(
                "episode finished; call reset first".into(),
            ));
        }
        let successors = SUCCESSORS[self.node];
        let &[choice] = action else {
            return Err(EnvError::InvalidAction(format!(
                "expected 1 action index, got {}",
                action.len()
            )));
        };
        if choice >= successors.len() {
            return Err(EnvError::InvalidAction(format!(
                "node v{} has {} outbound edges, got action {choice}",
                self.node,
                successors.len()
            )));
        }

        let next = if self.config.stochastic {
            let probs = STOCHASTIC[self.node][choice];
            let mut u: f64 = self.rng.random::<f64>();
            let mut picked = successors[successors.len() - 1];
            for (i, &p) in probs.iter().enumerate() {
                if u < p {
                    picked = successors[i];
                    break;
                }
                u -= p;
            }
            picked
        } else {
            successors[choice]
        };

        // Reward uses the covariates at decision time and the edge actually
        // traversed (which may differ from the chosen edge in stochastic mode).
        let r_exo = -self.exo.sum();
        let cost = self.config.edge_costs[&(self.node, next)];
        let r_end = -cost;

        for i in 0..EXO_VARS {
            let z: f64 = StandardNormal.sample(&mut self.rng);
            self.exo[i] = self.config.exo_decay * self.exo[i] + z * self.config.exo_noise_std;
        }
        self.node = next;

        Ok(StepOutcome {
            observation: self.observation(),
            reward: r_end + r_exo,
            reward_parts: RewardParts { r_exo, r_end },
            terminal: self.is_terminal(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn deterministic_single_edge_nodes_reach_their_successor() {
        let mut env = RoutingMdp::new(RoutingMdpConfig::new(false, 1)).unwrap();
        env.node = 5;
        let out = env.step(&[0]).unwrap();
        assert_eq!(env.current_node(), 8);
        assert!(out.terminal);
    }

    #[test]
    fn first_step_exo_reward_is_zero() {
        let mut env = RoutingMdp::new(RoutingMdpConfig::new(false, 2)).unwrap();
        env.reset();
        let out = env.step(&[0]).unwrap();
        assert_abs_diff_eq!(out.reward_parts.r_exo, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out.reward_parts.r_end, -2.0, epsilon = 1e-15);
    }

    #[test]
    fn stochastic_start_node_frequencies_match_the_table() {
        let mut env = RoutingMdp::new(RoutingMdpConfig::new(true, 3)).unwrap();
        let n = 100_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            env.node = 0;
            env.step(&[0]).unwrap();
            match env.current_node() {
                1 => counts[0] += 1,
                2 => counts[1] += 1,
                4 => counts[2] += 1,
                other => panic!("impossible successor v{other}"),
            }
        }
        for (count, p) in counts.iter().zip([0.5, 0.3, 0.2]) {
            let freq = *count as f64 / n as f64;
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            assert!(
                (freq - p).abs() < 3.0 * sigma,
                "frequency {freq} vs probability {p} (σ = {sigma})"
            );
        }
    }

    #[test]
    fn forced_transition_row_is_respected() {
        // v4 action 1 goes to v6 with probability 1 in stochastic mode.
        let mut env = RoutingMdp::new(RoutingMdpConfig::new(true, 4)).unwrap();
        for _ in 0..200 {
            env.node = 4;
            env.step(&[1]).unwrap();
            assert_eq!(env.current_node(), 6);
        }
    }

    #[test]
    fn episodes_terminate_within_five_steps() {
        let mut env = RoutingMdp::new(RoutingMdpConfig::new(true, 5)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..500 {
            env.reset();
            let mut steps = 0;
            loop {
                let valid = env.valid_action_counts()[0];
                let a = rng.random_range(0..valid);
                let out = env.step(&[a]).unwrap();
                steps += 1;
                if out.terminal {
                    break;
                }
                assert!(steps < 5, "episode exceeded the longest rightward path");
            }
            assert!(steps <= 5);
        }
    }

    #[test]
    fn covariates_persist_across_episodes() {
        let mut env = RoutingMdp::new(RoutingMdpConfig::new(false, 6)).unwrap();
        env.reset();
        env.step(&[0]).unwrap();
        let exo_mid = env.exo_state().clone();
        env.reset();
        assert_eq!(env.exo_state(), &exo_mid);
    }

    #[test]
    fn observation_is_one_hot_plus_covariates() {
        let mut env = RoutingMdp::new(RoutingMdpConfig::new(false, 7)).unwrap();
        let obs = env.reset();
        assert_eq!(obs.len(), 13);
        assert_abs_diff_eq!(obs[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(obs.rows(1, 8).amax(), 0.0, epsilon = 1e-15);
        let out = env.step(&[1]).unwrap();
        assert_abs_diff_eq!(out.observation[2], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn invalid_actions_are_rejected() {
        let mut env = RoutingMdp::new(RoutingMdpConfig::new(false, 8)).unwrap();
        env.reset();
        assert!(matches!(env.step(&[3]), Err(EnvError::InvalidAction(_))));
        env.node = 8;
        assert!(matches!(env.step(&[0]), Err(EnvError::InvalidAction(_))));
    }

    #[test]
    fn missing_edge_cost_fails_validation() {
        let mut config = RoutingMdpConfig::new(false, 0);
        config.edge_costs.remove(&(4, 8));
        assert!(matches!(RoutingMdp::new(config), Err(EnvError::Config(_))));
    }
}
