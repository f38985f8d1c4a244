use statcore::{cmi_tabular, CmiMode, TabularModel};

use crate::error::{DecomposeError, Result};

/// Largest variable count for which exhaustive subset enumeration is allowed
/// (2^12 = 4096 candidate sets).
const MAX_ENUMERATION_VARS: usize = 12;

/// Exact conditional mutual information below this is treated as zero.
const CMI_TOLERANCE: f64 = 1e-9;

/// Exact maximal-exogenous-set discovery for finite models: enumerate
/// variable subsets from largest to smallest and return the first whose
/// conditional mutual information vanishes. Because the maximal exogenous set
/// is unique and contains every other valid set, the first hit at the largest
/// feasible size *is* the maximum; the empty set (always valid) is the
/// fallback when nothing else qualifies.
///
/// This is the ground-truth counterpart of the sampled CCC-based scans, used
/// to validate them on small discrete models.
pub fn oracle_grds_tabular(model: &TabularModel, mode: CmiMode) -> Result<Vec<usize>> {
    let d = model.n_state_vars();
    if d > MAX_ENUMERATION_VARS {
        return Err(DecomposeError::Capacity(format!(
            "subset enumeration is limited to {MAX_ENUMERATION_VARS} state variables, got {d}"
        )));
    }
    for size in (0..=d).rev() {
        for mask in 0u32..(1u32 << d) {
            if mask.count_ones() as usize != size {
                continue;
            }
            let index_set: Vec<usize> = (0..d).filter(|i| mask & (1 << i) != 0).collect();
            let estimate = cmi_tabular(model, &index_set, mode).map_err(DecomposeError::Stat)?;
            if estimate.nats <= CMI_TOLERANCE {
                return Ok(index_set);
            }
        }
    }
    Ok(Vec::new())
}

/// A three-variable, two-action tabular MDP witnessing that valid exogenous
/// sets are not closed under subsets:
///
/// * variable 1 evolves on its own (an exogenous root),
/// * variable 0 is fed by variable 1 (exogenous only *jointly* with it),
/// * variable 2 is driven by the action (endogenous).
///
/// So {1} and {0, 1} are valid exogenous sets while the subset {0} is not —
/// its next value leaks information about variable 1. The maximal set is
/// {0, 1}.
pub fn subset_nonclosure_witness() -> TabularModel {
    // P(next = 1 | current values); generic entries so no coincidental
    // independence appears.
    let p0 = |v0: usize, v1: usize| [[0.2, 0.7], [0.6, 0.35]][v0][v1];
    let p1 = |v1: usize| [0.3, 0.8][v1];
    let p2 = |v2: usize, a: usize| [[0.25, 0.75], [0.55, 0.4]][v2][a];

    let cards = vec![2usize, 2, 2];
    let n_states = 8usize;
    let n_actions = 2usize;
    let rho = vec![1.0 / n_states as f64; n_states];
    let policy = vec![0.5; n_states * n_actions];

    let mut transition = vec![0.0; n_states * n_actions * n_states];
    let decode = |code: usize| [code & 1, (code >> 1) & 1, (code >> 2) & 1];
    let bern = |p: f64, value: usize| if value == 1 { p } else { 1.0 - p };
    for s in 0..n_states {
        let [v0, v1, v2] = decode(s);
        for a in 0..n_actions {
            for s_next in 0..n_states {
                let [n0, n1, n2] = decode(s_next);
                transition[(s * n_actions + a) * n_states + s_next] = bern(p0(v0, v1), n0)
                    * bern(p1(v1), n1)
                    * bern(p2(v2, a), n2);
            }
        }
    }
    TabularModel::from_parts(cards, n_actions, &rho, &policy, &transition)
        .expect("the witness tables are well-formed by construction")
}
