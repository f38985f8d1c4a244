use crate::error::{RegressError, Result};

/// How the exogenous reward model is fit and refreshed over a training run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegressionMode {
    /// Fit one least-squares model on the initial buffer and freeze it.
    SingleLinear,
    /// Refit the least-squares model periodically on the data gathered so
    /// far (optionally only the most recent window).
    RepeatedLinear,
    /// Fit the neural model on the initial buffer, then keep updating it
    /// with a single pass over each fresh block of samples.
    OnlineMlp,
}

/// Hyperparameters for reward-model fitting and its refresh cadence.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionSchedule {
    pub mode: RegressionMode,
    /// Online mode: number of fresh samples between incremental updates.
    pub update_interval: usize,
    /// Repeated-linear mode: number of steps between full refits.
    pub repeated_interval: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub batch_size: usize,
    pub phase1_max_epochs: usize,
    /// Repeated-linear mode: refit on only the most recent `window` samples
    /// when set; on everything collected so far when `None`.
    pub refit_window: Option<usize>,
}

impl Default for RegressionSchedule {
    fn default() -> Self {
        Self {
            mode: RegressionMode::OnlineMlp,
            update_interval: 256,
            repeated_interval: 1000,
            learning_rate: 3e-4,
            l2: 3e-5,
            batch_size: 256,
            phase1_max_epochs: 125,
            refit_window: None,
        }
    }
}

impl RegressionSchedule {
    pub fn single_linear() -> Self {
        Self { mode: RegressionMode::SingleLinear, ..Self::default() }
    }

    /// Periodic refits on the most recent 1000 samples.
    pub fn repeated_linear() -> Self {
        Self {
            mode: RegressionMode::RepeatedLinear,
            refit_window: Some(1000),
            ..Self::default()
        }
    }

    pub fn online_mlp() -> Self {
        Self { mode: RegressionMode::OnlineMlp, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.update_interval == 0 || self.repeated_interval == 0 {
            return Err(RegressError::InvalidParam("intervals must be positive".into()));
        }
        if self.batch_size == 0 || self.phase1_max_epochs == 0 {
            return Err(RegressError::InvalidParam(
                "batch size and epoch budget must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(RegressError::InvalidParam(format!(
                "learning rate must be positive and finite, got {}",
                self.learning_rate
            )));
        }
        if self.l2 < 0.0 || !self.l2.is_finite() {
            return Err(RegressError::InvalidParam(format!(
                "l2 coefficient must be non-negative, got {}",
                self.l2
            )));
        }
        if self.refit_window == Some(0) {
            return Err(RegressError::InvalidParam("refit window must be positive".into()));
        }
        Ok(())
    }
}
