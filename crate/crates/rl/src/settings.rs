use std::fmt;
use std::str::FromStr;

use crate::error::{Result, RlError};

/// Clipped-surrogate actor-critic hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpoSettings {
    /// Probability-ratio clip radius.
    pub clip: f64,
    /// Weight of the value-function mean-squared error in the joint loss.
    pub value_coeff: f64,
    /// Weight of the entropy bonus (0 disables it).
    pub entropy_coeff: f64,
    /// Generalized-advantage-estimation decay λ.
    pub gae_lambda: f64,
    /// Discount factor γ.
    pub discount: f64,
    pub learning_rate: f64,
    /// Samples per gradient step within an update.
    pub minibatch: usize,
    /// Environment steps collected between policy updates (K).
    pub rollout_steps: usize,
    /// Full passes over the rollout per update.
    pub epochs_per_update: usize,
    /// Rescale advantages to zero mean / unit standard deviation per update.
    pub normalize_advantages: bool,
}

impl Default for PpoSettings {
    fn default() -> Self {
        Self {
            clip: 0.2,
            value_coeff: 0.5,
            entropy_coeff: 0.0,
            gae_lambda: 0.95,
            discount: 0.99,
            learning_rate: 3e-4,
            minibatch: 64,
            rollout_steps: 1536,
            epochs_per_update: 10,
            normalize_advantages: true,
        }
    }
}

impl PpoSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.clip > 0.0) {
            return Err(RlError::InvalidParam(format!("clip must be > 0, got {}", self.clip)));
        }
        for (name, v) in [("discount", self.discount), ("gae_lambda", self.gae_lambda)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(RlError::InvalidParam(format!("{name} must lie in (0,1], got {v}")));
            }
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(RlError::InvalidParam(format!(
                "learning rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        for (name, v) in [
            ("value_coeff", self.value_coeff),
            ("entropy_coeff", self.entropy_coeff),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(RlError::InvalidParam(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        if self.minibatch == 0 || self.rollout_steps == 0 || self.epochs_per_update == 0 {
            return Err(RlError::InvalidParam(
                "minibatch, rollout_steps, and epochs_per_update must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Step budget of one two-phase run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSchedule {
    /// Total environment steps (N).
    pub total_steps: usize,
    /// Steps collected before subspace discovery and the reward-model fit (L).
    pub decomposition_steps: usize,
    /// Steps between reward-model updates in the second phase (M).
    pub regression_interval: usize,
    /// Steps per frozen-policy evaluation.
    pub eval_steps: usize,
    /// Seed driving evaluation action sampling (the evaluation environment
    /// itself is rebuilt from the run's environment configuration, so a fixed
    /// policy always sees identical evaluation conditions).
    pub eval_seed: u64,
}

impl RunSchedule {
    pub fn new(total_steps: usize, decomposition_steps: usize, eval_seed: u64) -> Self {
        Self {
            total_steps,
            decomposition_steps,
            regression_interval: 256,
            eval_steps: 1000,
            eval_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.total_steps == 0 {
            return Err(RlError::InvalidParam("total_steps must be positive".into()));
        }
        if self.decomposition_steps == 0 || self.decomposition_steps > self.total_steps {
            return Err(RlError::InvalidParam(format!(
                "decomposition_steps must lie in 1..=total_steps, got {} of {}",
                self.decomposition_steps, self.total_steps
            )));
        }
        if self.regression_interval == 0 || self.eval_steps == 0 {
            return Err(RlError::InvalidParam(
                "regression_interval and eval_steps must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Which reward stream the two-phase driver trains on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Raw rewards throughout; no discovery.
    Baseline,
    /// Full-objective rank-descending subspace discovery.
    Grds,
    /// Action-screen rank-descending discovery (full-objective verification).
    SimplifiedGrds,
    /// Stepwise candidate-accumulation discovery.
    Sras,
    /// Ground-truth endogenous reward channel; no discovery.
    Oracle,
}

impl Method {
    pub fn runs_discovery(self) -> bool {
        matches!(self, Method::Grds | Method::SimplifiedGrds | Method::Sras)
    }

    pub fn label(self) -> &'static str {
        match self {
            Method::Baseline => "baseline",
            Method::Grds => "grds",
            Method::SimplifiedGrds => "simplified_grds",
            Method::Sras => "sras",
            Method::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = RlError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Method::Baseline),
            "grds" => Ok(Method::Grds),
            "simplified_grds" => Ok(Method::SimplifiedGrds),
            "sras" => Ok(Method::Sras),
            "oracle" => Ok(Method::Oracle),
            other => Err(RlError::InvalidParam(format!(
                "unknown method '{other}' (expected baseline|grds|simplified_grds|sras|oracle)"
            ))),
        }
    }
}
