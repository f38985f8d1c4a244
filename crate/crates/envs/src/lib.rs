//! Seeded simulators for the synthetic MDP families used throughout the
//! toolkit: linear mixtures of hidden exogenous/endogenous chains (with
//! nonlinear-dynamics, nonlinear-reward, combinatorial-action, and
//! anti-correlated-reward variants) plus a small episodic routing problem
//! with discrete nodes and continuous exogenous covariates.
//!
//! Every simulator is a deterministic function of its seed. Ground truth —
//! hidden states, mixing matrices, and the exogenous/endogenous reward split
//! — is exposed through clearly separated oracle accessors so learning code
//! can only consume observations and total rewards.
//!
//! One instance is single-threaded (it owns mutable RNG state); run distinct
//! instances concurrently instead of sharing one.

mod error;
mod linear;
mod probe;
mod routing;

pub use error::EnvError;
pub use linear::{ActionMatrixKind, DynamicsKind, LinearMdp, LinearMdpConfig, RewardKind};
pub use probe::{covariance_probe, CovarianceProbe};
pub use routing::{RoutingMdp, RoutingMdpConfig, EXO_VARS, NODES};

use nalgebra::DVector;

/// Ground-truth reward split carried alongside every step. This is an oracle
/// channel: learners must consume only [`StepOutcome::reward`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardParts {
    pub r_exo: f64,
    pub r_end: f64,
}

/// Result of one environment transition. `reward` is evaluated in the state
/// where the action was taken (plus the traversed edge for the routing
/// family), so pair it with the observation *before* the step when building
/// regression datasets; `observation` is the post-transition state.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub observation: DVector<f64>,
    pub reward: f64,
    pub reward_parts: RewardParts,
    pub terminal: bool,
}

/// Uniform reset/step interface over all families. Actions are index vectors:
/// one index per action variable, each in `0..cardinality` for that variable.
pub trait Environment {
    fn observation_dim(&self) -> usize;

    /// Number of discrete choices per action variable (fixed across states).
    fn action_cardinalities(&self) -> &[usize];

    /// Number of choices per action variable valid in the current state
    /// (≤ the cardinality; learners mask out the rest).
    fn valid_action_counts(&self) -> Vec<usize>;

    /// Physical value represented by choice `index` of action variable
    /// `variable`, used when transitions are logged into numeric datasets.
    /// Families whose actions are plain categories keep the index itself.
    fn action_value(&self, _variable: usize, index: usize) -> f64 {
        index as f64
    }

    /// Starts a new episode (or re-draws the hidden state for continuing
    /// families) and returns the initial observation.
    fn reset(&mut self) -> DVector<f64>;

    fn step(&mut self, action: &[usize]) -> Result<StepOutcome, EnvError>;
}
