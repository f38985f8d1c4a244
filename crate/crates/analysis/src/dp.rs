use crate::error::{AnalysisError, Result};
use crate::tabular::{FactoredTabularMdp, TabularMdp};

/// A computed variance this far below zero indicates inconsistent inputs
/// rather than rounding; anything closer is clamped to 0.
const NEGATIVE_VARIANCE_TOLERANCE: f64 = 1e-9;

/// Expected `horizon`-step discounted return of the policy, per state:
/// V(s;h) = m(s,π) + γ·E_{s′}[V(s′;h−1)], V(·;0) = 0.
pub fn value_dp(mdp: &TabularMdp, horizon: usize) -> Result<Vec<f64>> {
    mdp.validate()?;
    let (ns, na) = (mdp.n_states, mdp.n_actions);
    let g = mdp.discount;
    let mut v = vec![0.0; ns];
    for _ in 0..horizon {
        let mut next = vec![0.0; ns];
        for s in 0..ns {
            let mut acc = 0.0;
            for a in 0..na {
                let pi = mdp.policy[s * na + a];
                if pi == 0.0 {
                    continue;
                }
                let mut future = 0.0;
                for s2 in 0..ns {
                    future += mdp.prob(s, a, s2) * v[s2];
                }
                acc += pi * (mdp.reward_mean[s * na + a] + g * future);
            }
            next[s] = acc;
        }
        v = next;
    }
    Ok(v)
}

/// Variance of the `horizon`-step discounted return, per state, by the
/// second-moment recursion
/// Var\[B(s;h)\] = E_{a,s′}\[σ²(s,a) + (m(s,a) + γV(s′;h−1))² + γ²·Var\[B(s′;h−1)\]\] − V(s;h)².
/// For a deterministic policy this is the familiar one-step decomposition
/// with σ² and the squared backed-up mean outside the γ² factor; mixing over
/// the policy's actions keeps the reward–transition correlation they share.
pub fn variance_dp(mdp: &TabularMdp, horizon: usize) -> Result<Vec<f64>> {
    mdp.validate()?;
    let (ns, na) = (mdp.n_states, mdp.n_actions);
    let g = mdp.discount;
    let mut v = vec![0.0; ns];
    let mut var = vec![0.0; ns];
    for h in 1..=horizon {
        let mut v_next = vec![0.0; ns];
        let mut var_next = vec![0.0; ns];
        for s in 0..ns {
            let mut mean_acc = 0.0;
            let mut second_acc = 0.0;
            for a in 0..na {
                let pi = mdp.policy[s * na + a];
                if pi == 0.0 {
                    continue;
                }
                let m = mdp.reward_mean[s * na + a];
                let noise = mdp.reward_var[s * na + a];
                let mut backed_mean = 0.0;
                let mut backed_second = 0.0;
                for s2 in 0..ns {
                    let p = mdp.prob(s, a, s2);
                    if p == 0.0 {
                        continue;
                    }
                    let backed = m + g * v[s2];
                    backed_mean += p * backed;
                    backed_second += p * (noise + backed * backed + g * g * var[s2]);
                }
                mean_acc += pi * backed_mean;
                second_acc += pi * backed_second;
            }
            let variance = second_acc - mean_acc * mean_acc;
            if variance < -NEGATIVE_VARIANCE_TOLERANCE {
                return Err(AnalysisError::Numeric(format!(
                    "negative return variance {variance} at state {s}, horizon {h}"
                )));
            }
            v_next[s] = mean_acc;
            var_next[s] = variance.max(0.0);
        }
        v = v_next;
        var = var_next;
    }
    Ok(var)
}

/// Covariance between the exogenous and endogenous `horizon`-step returns,
/// per joint state `e·n_exo + x`:
/// Cov(e,x;h) = E_{a,x′,e′}\[(m_x(x) + γV_x(x′;h−1))·(m_e(e,x,a) + γV_e(e′,x′;h−1))
///              + γ²·Cov(e′,x′;h−1)\] − V_x(x;h)·V_e(e,x;h), base 0.
/// Only the recursive covariance carries γ²; the one-step cross term is a
/// product of backed-up values whose discounts are already inside. (Expanding
/// the non-centered covariance of R + γB′ for each channel yields exactly
/// this grouping.)
pub fn covariance_dp(mdp: &TabularMdp, horizon: usize) -> Result<Vec<f64>> {
    let f = mdp.factored()?;
    f.validate()?;
    let (nx, ne, na) = (f.n_exo, f.n_end, f.n_actions);
    let g = f.discount;
    let mut vx = vec![0.0; nx];
    let mut ve = vec![0.0; nx * ne];
    let mut cov = vec![0.0; nx * ne];
    for _ in 0..horizon {
        let mut vx_next = vec![0.0; nx];
        for x in 0..nx {
            let mut future = 0.0;
            for x2 in 0..nx {
                future += f.exo_transition[x * nx + x2] * vx[x2];
            }
            vx_next[x] = f.exo_reward_mean[x] + g * future;
        }
        let mut ve_next = vec![0.0; nx * ne];
        let mut cov_next = vec![0.0; nx * ne];
        for e in 0..ne {
            for x in 0..nx {
                let mut ve_acc = 0.0;
                let mut cross_acc = 0.0;
                for a in 0..na {
                    let exa = f.sa_index(e, x, a);
                    let pi = f.policy[exa];
                    if pi == 0.0 {
                        continue;
                    }
                    let me = f.endo_reward_mean[exa];
                    let mut backed_e = 0.0;
                    let mut backed_cross = 0.0;
                    for x2 in 0..nx {
                        let px = f.exo_transition[x * nx + x2];
                        if px == 0.0 {
                            continue;
                        }
                        let bx = f.exo_reward_mean[x] + g * vx[x2];
                        for e2 in 0..ne {
                            let p = px * f.endo_transition[exa * ne + e2];
                            if p == 0.0 {
                                continue;
                            }
                            let s2 = f.joint_state(e2, x2);
                            let be = me + g * ve[s2];
                            backed_e += p * be;
                            backed_cross += p * (bx * be + g * g * cov[s2]);
                        }
                    }
                    ve_acc += pi * backed_e;
                    cross_acc += pi * backed_cross;
                }
                let s = f.joint_state(e, x);
                ve_next[s] = ve_acc;
                cov_next[s] = cross_acc - vx_next[x] * ve_acc;
            }
        }
        vx = vx_next;
        ve = ve_next;
        cov = cov_next;
    }
    Ok(cov)
}

/// Monte-Carlo trial count sufficient for P(|estimate − mean| > ε) ≤ δ by
/// Chebychev: ⌈Var/(δ·ε²)⌉.
pub fn chebychev_n(variance: f64, epsilon: f64, delta: f64) -> Result<u64> {
    if !variance.is_finite() || variance < 0.0 {
        return Err(AnalysisError::InvalidParam(format!(
            "variance must be a nonnegative real, got {variance}"
        )));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(AnalysisError::InvalidParam(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(delta.is_finite() && delta > 0.0 && delta < 1.0) {
        return Err(AnalysisError::InvalidParam(format!("delta must lie in (0, 1), got {delta}")));
    }
    if variance == 0.0 {
        return Ok(0);
    }
    let n = (variance / (delta * epsilon * epsilon)).ceil();
    if !n.is_finite() || n > u64::MAX as f64 {
        return Err(AnalysisError::Numeric(format!("trial bound overflows: {n}")));
    }
    Ok(n as u64)
}

/// Whether removing the exogenous reward reduces return variance at one
/// state: the split pays off iff Var\[B_exo\] > −2·Cov\[B_exo, B_end\].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceCondition {
    pub holds: bool,
    pub var_exo: f64,
    pub neg2cov: f64,
}

/// Evaluates the variance-reduction condition at joint state
/// `state = e·n_exo + x` over the given horizon.
pub fn covariance_condition(
    mdp: &TabularMdp,
    state: usize,
    horizon: usize,
) -> Result<CovarianceCondition> {
    let f = mdp.factored()?;
    if state >= f.n_exo * f.n_end {
        return Err(AnalysisError::Dimension(format!(
            "state {state} out of range for {}×{} factored space",
            f.n_end, f.n_exo
        )));
    }
    let (_, x) = f.split_state(state);
    let var_exo = variance_dp(&f.exo_chain()?, horizon)?[x];
    let neg2cov = -2.0 * covariance_dp(mdp, horizon)?[state];
    // Strictness below roundoff cannot be certified: a deterministic
    // exogenous return accumulates ~1e-17 of residue in the recursion and
    // must still sit on the boundary (condition false).
    let tolerance = 1e-12 * (1.0 + var_exo.abs() + neg2cov.abs());
    Ok(CovarianceCondition { holds: var_exo - neg2cov > tolerance, var_exo, neg2cov })
}

/// Exogenous value recursion V_x(x;h) = m_x(x) + γ·E_{x′}[V_x(x′;h−1)].
pub fn exo_value_dp(f: &FactoredTabularMdp, horizon: usize) -> Result<Vec<f64>> {
    value_dp(&f.exo_chain()?, horizon)
}

/// Optimal endogenous value recursion
/// V_e(e,x;h) = max_a { m_e(e,x,a) + γ·E_{x′,e′}[V_e(e′,x′;h−1)] },
/// indexed by joint state `e·n_exo + x`.
pub fn endo_value_dp(f: &FactoredTabularMdp, horizon: usize) -> Result<Vec<f64>> {
    f.validate()?;
    let (nx, ne, na) = (f.n_exo, f.n_end, f.n_actions);
    let g = f.discount;
    let mut v = vec![0.0; nx * ne];
    for _ in 0..horizon {
        let mut next = vec![0.0; nx * ne];
        for e in 0..ne {
            for x in 0..nx {
                let mut best = f64::NEG_INFINITY;
                for a in 0..na {
                    let exa = f.sa_index(e, x, a);
                    let mut future = 0.0;
                    for x2 in 0..nx {
                        let px = f.exo_transition[x * nx + x2];
                        if px == 0.0 {
                            continue;
                        }
                        for e2 in 0..ne {
                            future += px
                                * f.endo_transition[exa * ne + e2]
                                * v[f.joint_state(e2, x2)];
                        }
                    }
                    best = best.max(f.endo_reward_mean[exa] + g * future);
                }
                next[f.joint_state(e, x)] = best;
            }
        }
        v = next;
    }
    Ok(v)
}

/// Finite-horizon optimal value iteration on the joint tables.
fn optimal_value_dp(mdp: &TabularMdp, horizon: usize) -> Vec<f64> {
    let (ns, na) = (mdp.n_states, mdp.n_actions);
    let g = mdp.discount;
    let mut v = vec![0.0; ns];
    for _ in 0..horizon {
        let mut next = vec![0.0; ns];
        for s in 0..ns {
            let mut best = f64::NEG_INFINITY;
            for a in 0..na {
                let mut future = 0.0;
                for s2 in 0..ns {
                    future += mdp.prob(s, a, s2) * v[s2];
                }
                best = best.max(mdp.reward_mean[s * na + a] + g * future);
            }
            next[s] = best;
        }
        v = next;
    }
    v
}

/// Verifies that the optimal value of the joint MDP splits into the sum of
/// the exogenous chain value and the optimal endogenous value; returns
/// max over (e,x) of |V(e,x;h) − (V_exo(x;h) + V_end(e,x;h))|. Zero (to
/// rounding) when the joint reward really is the sum of the two channels;
/// materially positive otherwise.
pub fn bellman_split_check(mdp: &TabularMdp, horizon: usize) -> Result<f64> {
    mdp.validate()?;
    let f = mdp.factored()?;
    let v_full = optimal_value_dp(mdp, horizon);
    let v_exo = exo_value_dp(f, horizon)?;
    let v_end = endo_value_dp(f, horizon)?;
    let mut worst: f64 = 0.0;
    for e in 0..f.n_end {
        for x in 0..f.n_exo {
            let s = f.joint_state(e, x);
            worst = worst.max((v_full[s] - (v_exo[x] + v_end[s])).abs());
        }
    }
    Ok(worst)
}
