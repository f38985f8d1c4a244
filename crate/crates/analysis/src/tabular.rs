use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{AnalysisError, Result};

/// Largest admissible deviation of a probability row from summing to one.
pub const ROW_TOLERANCE: f64 = 1e-12;

/// A finite MDP under a fixed stochastic policy: joint transition table,
/// first two moments of the per-(state, action) reward distribution, and an
/// optional exogenous/endogenous factored form for the covariance and
/// Bellman-split diagnostics.
///
/// Flat row-major layouts: `transition[(s·A + a)·S + s2]`,
/// `reward_*[s·A + a]`, `policy[s·A + a]`.
#[derive(Debug, Clone)]
pub struct TabularMdp {
    pub n_states: usize,
    pub n_actions: usize,
    pub transition: Vec<f64>,
    pub reward_mean: Vec<f64>,
    pub reward_var: Vec<f64>,
    pub policy: Vec<f64>,
    pub discount: f64,
    pub horizon: usize,
    pub factored: Option<FactoredTabularMdp>,
}

/// The exo/endo factored form: an action-free chain over exogenous states
/// `x` with reward channel (m_exo, σ²_exo), and an endogenous process over
/// `(e, x)` pairs with its own channel and the policy. The reward of the
/// corresponding joint MDP is the sum of the two channels with independent
/// noise.
///
/// Joint states are coded `s = e·n_exo + x`. Flat layouts:
/// `exo_transition[x·n_exo + x2]`,
/// `endo_transition[((e·n_exo + x)·A + a)·n_end + e2]`,
/// `endo_reward_*[(e·n_exo + x)·A + a]`, `policy` likewise.
#[derive(Debug, Clone)]
pub struct FactoredTabularMdp {
    pub n_exo: usize,
    pub n_end: usize,
    pub n_actions: usize,
    pub exo_transition: Vec<f64>,
    pub exo_reward_mean: Vec<f64>,
    pub exo_reward_var: Vec<f64>,
    pub endo_transition: Vec<f64>,
    pub endo_reward_mean: Vec<f64>,
    pub endo_reward_var: Vec<f64>,
    pub policy: Vec<f64>,
    pub discount: f64,
    pub horizon: usize,
}

fn check_rows(table: &[f64], rows: usize, width: usize, what: &str) -> Result<()> {
    if table.len() != rows * width {
        return Err(AnalysisError::Dimension(format!(
            "{what} table has {} entries, expected {rows}×{width}",
            table.len()
        )));
    }
    for r in 0..rows {
        let row = &table[r * width..(r + 1) * width];
        if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(AnalysisError::InvalidParam(format!(
                "{what} row {r} contains a negative or non-finite probability"
            )));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_TOLERANCE {
            return Err(AnalysisError::InvalidParam(format!(
                "{what} row {r} sums to {sum}, expected 1 within {ROW_TOLERANCE}"
            )));
        }
    }
    Ok(())
}

fn check_moments(mean: &[f64], var: &[f64], len: usize, what: &str) -> Result<()> {
    if mean.len() != len || var.len() != len {
        return Err(AnalysisError::Dimension(format!(
            "{what} reward tables have {}/{} entries, expected {len}",
            mean.len(),
            var.len()
        )));
    }
    if mean.iter().any(|m| !m.is_finite()) {
        return Err(AnalysisError::InvalidParam(format!("{what} reward mean is non-finite")));
    }
    if var.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(AnalysisError::InvalidParam(format!(
            "{what} reward variance is negative or non-finite"
        )));
    }
    Ok(())
}

fn check_discount(discount: f64) -> Result<()> {
    if !(discount.is_finite() && (0.0..=1.0).contains(&discount)) {
        return Err(AnalysisError::InvalidParam(format!(
            "discount must lie in [0, 1], got {discount}"
        )));
    }
    Ok(())
}

impl TabularMdp {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transition: Vec<f64>,
        reward_mean: Vec<f64>,
        reward_var: Vec<f64>,
        policy: Vec<f64>,
        discount: f64,
        horizon: usize,
    ) -> Result<Self> {
        let mdp = Self {
            n_states,
            n_actions,
            transition,
            reward_mean,
            reward_var,
            policy,
            discount,
            horizon,
            factored: None,
        };
        mdp.validate()?;
        Ok(mdp)
    }

    /// Builds the joint MDP implied by a factored form: product transitions,
    /// channel-sum reward mean and variance (independent noises), shared
    /// policy. The factored form is kept alongside for the diagnostics that
    /// need it.
    pub fn from_factored(factored: FactoredTabularMdp) -> Result<Self> {
        factored.validate()?;
        let f = &factored;
        let (nx, ne, na) = (f.n_exo, f.n_end, f.n_actions);
        let n_states = nx * ne;
        let mut transition = vec![0.0; n_states * na * n_states];
        let mut reward_mean = vec![0.0; n_states * na];
        let mut reward_var = vec![0.0; n_states * na];
        let mut policy = vec![0.0; n_states * na];
        for e in 0..ne {
            for x in 0..nx {
                let s = f.joint_state(e, x);
                for a in 0..na {
                    let exa = f.sa_index(e, x, a);
                    reward_mean[s * na + a] = f.exo_reward_mean[x] + f.endo_reward_mean[exa];
                    reward_var[s * na + a] = f.exo_reward_var[x] + f.endo_reward_var[exa];
                    policy[s * na + a] = f.policy[exa];
                    for x2 in 0..nx {
                        let px = f.exo_transition[x * nx + x2];
                        for e2 in 0..ne {
                            let pe = f.endo_transition[exa * ne + e2];
                            let s2 = f.joint_state(e2, x2);
                            transition[(s * na + a) * n_states + s2] = px * pe;
                        }
                    }
                }
            }
        }
        let mdp = Self {
            n_states,
            n_actions: na,
            transition,
            reward_mean,
            reward_var,
            policy,
            discount: f.discount,
            horizon: f.horizon,
            factored: Some(factored),
        };
        mdp.validate()?;
        Ok(mdp)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_states == 0 || self.n_actions == 0 {
            return Err(AnalysisError::InvalidParam(
                "state and action counts must be positive".into(),
            ));
        }
        check_rows(
            &self.transition,
            self.n_states * self.n_actions,
            self.n_states,
            "transition",
        )?;
        check_rows(&self.policy, self.n_states, self.n_actions, "policy")?;
        check_moments(
            &self.reward_mean,
            &self.reward_var,
            self.n_states * self.n_actions,
            "joint",
        )?;
        check_discount(self.discount)?;
        if let Some(f) = &self.factored {
            f.validate()?;
            if f.n_exo * f.n_end != self.n_states || f.n_actions != self.n_actions {
                return Err(AnalysisError::Dimension(
                    "factored form shape disagrees with the joint tables".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn prob(&self, s: usize, a: usize, s2: usize) -> f64 {
        self.transition[(s * self.n_actions + a) * self.n_states + s2]
    }

    pub fn factored(&self) -> Result<&FactoredTabularMdp> {
        self.factored.as_ref().ok_or(AnalysisError::MissingFactoredForm)
    }
}

impl FactoredTabularMdp {
    pub fn joint_state(&self, e: usize, x: usize) -> usize {
        e * self.n_exo + x
    }

    pub fn split_state(&self, s: usize) -> (usize, usize) {
        (s / self.n_exo, s % self.n_exo)
    }

    /// Index into the endo reward/policy tables for (e, x, a).
    pub fn sa_index(&self, e: usize, x: usize, a: usize) -> usize {
        self.joint_state(e, x) * self.n_actions + a
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_exo == 0 || self.n_end == 0 || self.n_actions == 0 {
            return Err(AnalysisError::InvalidParam(
                "exo, endo, and action counts must be positive".into(),
            ));
        }
        let pairs = self.n_exo * self.n_end;
        check_rows(&self.exo_transition, self.n_exo, self.n_exo, "exo transition")?;
        check_rows(
            &self.endo_transition,
            pairs * self.n_actions,
            self.n_end,
            "endo transition",
        )?;
        check_rows(&self.policy, pairs, self.n_actions, "policy")?;
        check_moments(&self.exo_reward_mean, &self.exo_reward_var, self.n_exo, "exo")?;
        check_moments(
            &self.endo_reward_mean,
            &self.endo_reward_var,
            pairs * self.n_actions,
            "endo",
        )?;
        check_discount(self.discount)?;
        Ok(())
    }

    /// The exogenous chain as a standalone action-free MDP (one dummy
    /// action), rewarded by the exogenous channel only.
    pub fn exo_chain(&self) -> Result<TabularMdp> {
        TabularMdp::new(
            self.n_exo,
            1,
            self.exo_transition.clone(),
            self.exo_reward_mean.clone(),
            self.exo_reward_var.clone(),
            vec![1.0; self.n_exo],
            self.discount,
            self.horizon,
        )
    }

    /// The joint process rewarded by the endogenous channel only, under the
    /// factored policy — the process whose return is B_end.
    pub fn endo_channel(&self) -> Result<TabularMdp> {
        let (nx, ne, na) = (self.n_exo, self.n_end, self.n_actions);
        let n_states = nx * ne;
        let mut transition = vec![0.0; n_states * na * n_states];
        for e in 0..ne {
            for x in 0..nx {
                for a in 0..na {
                    let exa = self.sa_index(e, x, a);
                    for x2 in 0..nx {
                        let px = self.exo_transition[x * nx + x2];
                        for e2 in 0..ne {
                            let pe = self.endo_transition[exa * ne + e2];
                            transition[(self.joint_state(e, x) * na + a) * n_states
                                + self.joint_state(e2, x2)] = px * pe;
                        }
                    }
                }
            }
        }
        TabularMdp::new(
            n_states,
            na,
            transition,
            self.endo_reward_mean.clone(),
            self.endo_reward_var.clone(),
            self.policy.clone(),
            self.discount,
            self.horizon,
        )
    }
}

/// Seeded generator of valid random factored instances, for property tests
/// and the oracle comparisons: probability entries are bounded away from
/// zero, reward means lie in [−1, 1], variances in [0, 0.3].
pub fn random_factored(
    n_exo: usize,
    n_end: usize,
    n_actions: usize,
    discount: f64,
    horizon: usize,
    seed: u64,
) -> FactoredTabularMdp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = |rows: usize, width: usize| -> Vec<f64> {
        let mut table = vec![0.0; rows * width];
        for r in 0..rows {
            let row = &mut table[r * width..(r + 1) * width];
            let mut sum = 0.0;
            for p in row.iter_mut() {
                *p = rng.random_range(0.1..1.1);
                sum += *p;
            }
            for p in row.iter_mut() {
                *p /= sum;
            }
        }
        table
    };
    let exo_transition = rows(n_exo, n_exo);
    let endo_transition = rows(n_exo * n_end * n_actions, n_end);
    let policy = rows(n_exo * n_end, n_actions);
    let mut means = |len: usize| -> Vec<f64> {
        (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
    };
    let exo_reward_mean = means(n_exo);
    let endo_reward_mean = means(n_exo * n_end * n_actions);
    let mut vars = |len: usize| -> Vec<f64> {
        (0..len).map(|_| rng.random_range(0.0..0.3)).collect()
    };
    let exo_reward_var = vars(n_exo);
    let endo_reward_var = vars(n_exo * n_end * n_actions);
    FactoredTabularMdp {
        n_exo,
        n_end,
        n_actions,
        exo_transition,
        exo_reward_mean,
        exo_reward_var,
        endo_transition,
        endo_reward_mean,
        endo_reward_var,
        policy,
        discount,
        horizon,
    }
}

/// Two exo states, two endo states, two actions; generic entries.
#[cfg(test)]
pub(crate) fn sample_factored() -> FactoredTabularMdp {
    FactoredTabularMdp {
        n_exo: 2,
        n_end: 2,
        n_actions: 2,
        exo_transition: vec![0.7, 0.3, 0.4, 0.6],
        exo_reward_mean: vec![1.0, -0.5],
        exo_reward_var: vec![0.25, 0.09],
        endo_transition: vec![
            0.9, 0.1, 0.2, 0.8, // (e=0,x=0), a=0..1
            0.5, 0.5, 0.6, 0.4, // (e=0,x=1)
            0.3, 0.7, 0.8, 0.2, // (e=1,x=0)
            0.15, 0.85, 0.45, 0.55, // (e=1,x=1)
        ],
        endo_reward_mean: vec![0.2, 1.1, -0.3, 0.4, 0.9, -0.2, 0.5, 0.35],
        endo_reward_var: vec![0.04, 0.16, 0.01, 0.09, 0.25, 0.04, 0.16, 0.01],
        policy: vec![0.5, 0.5, 0.3, 0.7, 0.6, 0.4, 0.25, 0.75],
        discount: 0.9,
        horizon: 10,
    }
}
