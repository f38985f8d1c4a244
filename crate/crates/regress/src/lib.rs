//! Reward-stream decomposition by regression.
//!
//! Once a projection splits the state space into exogenous and endogenous
//! parts, the reward can be split too: fit a model of the reward as a
//! function of the exogenous coordinates alone, and subtract its predictions
//! from the observed rewards. What remains — the endogenous reward — is the
//! only part a policy can influence, and it is typically far less noisy.
//!
//! Three fitting regimes are supported: a single least-squares fit on the
//! initial buffer, periodic least-squares refits as data accumulates, and a
//! small rectified-linear network fit on the buffer and then updated online
//! with one pass over each fresh block of samples.

mod error;
mod linear;
mod mlp;
mod model;
mod schedule;

pub use error::{RegressError, Result};
pub use linear::{fit_linear, LinearModel};
pub use mlp::{fit_mlp_phase1, update_mlp_online, MlpModel, HIDDEN};
pub use model::{endo_reward, RewardModel};
pub use schedule::{RegressionMode, RegressionSchedule};
