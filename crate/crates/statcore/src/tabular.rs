use crate::error::{Result, StatError};

/// Upper bound on dense joint-table cells (protects against accidental
/// construction of astronomically large models).
const MAX_CELLS: usize = 64_000_000;

/// An explicit finite joint distribution over one transition:
/// `P(S = s, A = a, S′ = s′)` where the state is a tuple of discrete
/// variables with per-variable cardinalities.
///
/// States are addressed by mixed-radix codes (variable 0 is the lowest-order
/// digit); the joint table is dense with layout `(s_code · A + a) · S + s′_code`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularModel {
    state_cardinalities: Vec<usize>,
    action_cardinality: usize,
    joint: Vec<f64>,
}

impl TabularModel {
    /// Wraps a fully materialized joint table, validating sign and
    /// normalization (the table must sum to 1 within 1e-12).
    pub fn from_joint(
        state_cardinalities: Vec<usize>,
        action_cardinality: usize,
        joint: Vec<f64>,
    ) -> Result<Self> {
        if state_cardinalities.is_empty() || state_cardinalities.iter().any(|&c| c == 0) {
            return Err(StatError::InvalidTable(
                "state cardinalities must be positive and non-empty".into(),
            ));
        }
        if action_cardinality == 0 {
            return Err(StatError::InvalidTable("action cardinality must be positive".into()));
        }
        let n_states: usize = state_cardinalities.iter().product();
        let expected = n_states
            .checked_mul(action_cardinality)
            .and_then(|v| v.checked_mul(n_states))
            .filter(|&v| v <= MAX_CELLS)
            .ok_or_else(|| {
                StatError::InvalidTable(format!(
                    "joint table would exceed the {MAX_CELLS}-cell capacity"
                ))
            })?;
        if joint.len() != expected {
            return Err(StatError::InvalidTable(format!(
                "joint table has {} cells, expected {expected}",
                joint.len()
            )));
        }
        if joint.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(StatError::InvalidTable(
                "probabilities must be finite and non-negative".into(),
            ));
        }
        let total: f64 = joint.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(StatError::InvalidTable(format!(
                "joint table sums to {total}, expected 1 within 1e-12"
            )));
        }
        Ok(Self {
            state_cardinalities,
            action_cardinality,
            joint,
        })
    }

    /// Builds the joint from its generative parts: a state distribution
    /// `rho[s]`, a policy `policy[s·A + a]`, and a transition kernel
    /// `transition[(s·A + a)·S + s′]`.
    pub fn from_parts(
        state_cardinalities: Vec<usize>,
        action_cardinality: usize,
        rho: &[f64],
        policy: &[f64],
        transition: &[f64],
    ) -> Result<Self> {
        let n_states: usize = state_cardinalities.iter().product();
        let a = action_cardinality;
        if rho.len() != n_states || policy.len() != n_states * a || transition.len() != n_states * a * n_states
        {
            return Err(StatError::InvalidTable(
                "component table sizes do not match the cardinalities".into(),
            ));
        }
        let mut joint = vec![0.0; n_states * a * n_states];
        for s in 0..n_states {
            for act in 0..a {
                let base = (s * a + act) * n_states;
                let w = rho[s] * policy[s * a + act];
                for s_next in 0..n_states {
                    joint[base + s_next] = w * transition[base + s_next];
                }
            }
        }
        // Renormalize away accumulated rounding before validation.
        let total: f64 = joint.iter().sum();
        if total <= 0.0 {
            return Err(StatError::InvalidTable("component tables carry no mass".into()));
        }
        for p in &mut joint {
            *p /= total;
        }
        Self::from_joint(state_cardinalities, action_cardinality, joint)
    }

    pub fn n_state_vars(&self) -> usize {
        self.state_cardinalities.len()
    }

    pub fn state_cardinalities(&self) -> &[usize] {
        &self.state_cardinalities
    }

    pub fn action_cardinality(&self) -> usize {
        self.action_cardinality
    }

    pub fn n_states(&self) -> usize {
        self.state_cardinalities.iter().product()
    }

    /// Probability of one `(s, a, s′)` cell, addressed by state codes.
    pub fn prob(&self, s: usize, a: usize, s_next: usize) -> f64 {
        self.joint[(s * self.action_cardinality + a) * self.n_states() + s_next]
    }

    /// Iterates over all `(s_code, a, s′_code, p)` cells with `p > 0`.
    pub fn support(&self) -> impl Iterator<Item = (usize, usize, usize, f64)> + '_ {
        let n_states = self.n_states();
        let a_card = self.action_cardinality;
        self.joint.iter().enumerate().filter_map(move |(idx, &p)| {
            if p > 0.0 {
                let s_next = idx % n_states;
                let rest = idx / n_states;
                let a = rest % a_card;
                let s = rest / a_card;
                Some((s, a, s_next, p))
            } else {
                None
            }
        })
    }

    /// Encodes per-variable values into a mixed-radix state code.
    pub fn encode(&self, values: &[usize]) -> usize {
        debug_assert_eq!(values.len(), self.state_cardinalities.len());
        let mut code = 0;
        for (v, c) in values.iter().zip(&self.state_cardinalities).rev() {
            debug_assert!(v < c);
            code = code * c + v;
        }
        code
    }

    /// Decodes a state code into per-variable values.
    pub fn decode(&self, mut code: usize) -> Vec<usize> {
        let mut values = Vec::with_capacity(self.state_cardinalities.len());
        for &c in &self.state_cardinalities {
            values.push(code % c);
            code /= c;
        }
        values
    }

    /// Projects a state code onto a subset of variables, producing a compact
    /// mixed-radix code over just those variables (in ascending index order).
    pub fn project(&self, code: usize, index_set: &[usize]) -> u64 {
        let values = self.decode(code);
        let mut projected: u64 = 0;
        for &i in index_set.iter().rev() {
            projected = projected * self.state_cardinalities[i] as u64 + values[i] as u64;
        }
        projected
    }
}
