//! A compact clipped-surrogate actor-critic (factored categorical policy,
//! generalized advantage estimation, adaptive-moment optimization) plus the
//! two-phase training driver that discovers the exogenous state subspace
//! after an initial collection phase, regresses the exogenous reward away,
//! and continues training on the estimated endogenous reward stream.
//!
//! The driver is method-parametric: baseline (raw rewards), the three
//! discovery algorithms, and a ground-truth endogenous-reward oracle share
//! one code path, differing only in how stored rewards are produced. After
//! every policy update the frozen policy is scored in a fresh environment
//! instance under a fixed action-sampling seed, so curve points are exactly
//! comparable within and across runs.

mod buffer;
mod driver;
mod error;
mod eval;
mod net;
mod nets;
mod ppo;
mod settings;

pub use buffer::{collect_rollout, gae_advantages, RewardTransform, RolloutBuffer};
pub use driver::{
    run_two_phase, run_two_phase_streaming, PhaseOneTrace, TwoPhaseConfig, TwoPhaseOutcome,
    UpdateRecord,
};
pub use error::{Result, RlError};
pub use eval::evaluate_policy;
pub use nets::{PolicyValueNets, HIDDEN_WIDTH};
pub use ppo::{ppo_update, PpoDiagnostics};
pub use settings::{Method, PpoSettings, RunSchedule};
