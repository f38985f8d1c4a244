use crate::error::{AnalysisError, Result};

/// A node of the two-slice template: a state variable at the current step,
/// the action, or a state variable at the next step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DbnNode {
    Current(usize),
    Action,
    Next(usize),
}

/// Two-slice dynamic-Bayesian-network template of a factored MDP: `d` state
/// variables and directed edges among {current variables, the action, next
/// variables}. Admissible edge kinds are current→next (dynamics),
/// current→action (policy), action→next (control), and next→next
/// (synchronic, acyclic). `horizon` is the unrolling depth used by the
/// structural checks; paths in a d-variable template need at most 2d slices
/// to witness connectivity, hence the default.
#[derive(Debug, Clone)]
pub struct DbnTemplate {
    pub n_variables: usize,
    pub edges: Vec<(DbnNode, DbnNode)>,
    pub horizon: usize,
}

impl DbnTemplate {
    pub fn new(n_variables: usize, edges: Vec<(DbnNode, DbnNode)>) -> Result<Self> {
        let template = Self { n_variables, edges, horizon: 2 * n_variables };
        template.validate()?;
        Ok(template)
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_variables == 0 {
            return Err(AnalysisError::InvalidParam("need at least one state variable".into()));
        }
        let index_ok = |node: &DbnNode| match node {
            DbnNode::Current(i) | DbnNode::Next(i) => *i < self.n_variables,
            DbnNode::Action => true,
        };
        for (from, to) in &self.edges {
            if !index_ok(from) || !index_ok(to) {
                return Err(AnalysisError::Structure(format!(
                    "edge ({from:?} → {to:?}) names a variable outside 0..{}",
                    self.n_variables
                )));
            }
            let allowed = matches!(
                (from, to),
                (DbnNode::Current(_), DbnNode::Next(_))
                    | (DbnNode::Current(_), DbnNode::Action)
                    | (DbnNode::Action, DbnNode::Next(_))
                    | (DbnNode::Next(_), DbnNode::Next(_))
            );
            if !allowed {
                return Err(AnalysisError::Structure(format!(
                    "edge ({from:?} → {to:?}) is not one of current→next, current→action, \
                     action→next, next→next"
                )));
            }
        }
        self.check_synchronic_acyclic()
    }

    /// The next→next subgraph must be a DAG for the template to describe a
    /// factorizable one-step kernel.
    fn check_synchronic_acyclic(&self) -> Result<()> {
        let d = self.n_variables;
        let mut adjacency = vec![Vec::new(); d];
        for (from, to) in &self.edges {
            if let (DbnNode::Next(i), DbnNode::Next(j)) = (from, to) {
                adjacency[*i].push(*j);
            }
        }
        // Iterative DFS three-coloring.
        let mut state = vec![0u8; d]; // 0 unvisited, 1 on stack, 2 done
        for start in 0..d {
            if state[start] != 0 {
                continue;
            }
            let mut stack = vec![(start, 0usize)];
            state[start] = 1;
            while let Some((node, cursor)) = stack.pop() {
                if cursor < adjacency[node].len() {
                    stack.push((node, cursor + 1));
                    let next = adjacency[node][cursor];
                    match state[next] {
                        0 => {
                            state[next] = 1;
                            stack.push((next, 0));
                        }
                        1 => {
                            return Err(AnalysisError::Structure(format!(
                                "synchronic next→next edges contain a cycle through \
                                 variable {next}"
                            )));
                        }
                        _ => {}
                    }
                } else {
                    state[node] = 2;
                }
            }
        }
        Ok(())
    }

    fn dynamics_edges(&self) -> Vec<(usize, usize)> {
        self.edges
            .iter()
            .filter_map(|(f, t)| match (f, t) {
                (DbnNode::Current(i), DbnNode::Next(j)) => Some((*i, *j)),
                _ => None,
            })
            .collect()
    }

    fn policy_edges(&self) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|(f, t)| match (f, t) {
                (DbnNode::Current(i), DbnNode::Action) => Some(*i),
                _ => None,
            })
            .collect()
    }

    fn control_edges(&self) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|(f, t)| match (f, t) {
                (DbnNode::Action, DbnNode::Next(j)) => Some(*j),
                _ => None,
            })
            .collect()
    }

    fn synchronic_edges(&self) -> Vec<(usize, usize)> {
        self.edges
            .iter()
            .filter_map(|(f, t)| match (f, t) {
                (DbnNode::Next(i), DbnNode::Next(j)) => Some((*i, *j)),
                _ => None,
            })
            .collect()
    }
}

/// Variables with no directed path from any action node in the template
/// unrolled over `template.horizon` slices — the structurally (hence
/// causally) exogenous variables. Returned ascending.
pub fn action_disconnected(template: &DbnTemplate) -> Result<Vec<usize>> {
    template.validate()?;
    let d = template.n_variables;
    let h = template.horizon;
    let dynamics = template.dynamics_edges();
    let policy = template.policy_edges();
    let control = template.control_edges();
    let synchronic = template.synchronic_edges();

    // visited_state[t·d + i] marks variable i at slice t; visited_action[t]
    // marks the action taken at slice t (t < h).
    let mut visited_state = vec![false; (h + 1) * d];
    let mut visited_action = vec![false; h.max(1)];
    let mut queue: Vec<(usize, Option<usize>)> = Vec::new(); // (slice, var or action)
    for t in 0..h {
        visited_action[t] = true;
        queue.push((t, None));
    }
    while let Some((t, node)) = queue.pop() {
        match node {
            None => {
                // Action at slice t reaches its control targets at t + 1.
                for &j in &control {
                    if t + 1 <= h && !visited_state[(t + 1) * d + j] {
                        visited_state[(t + 1) * d + j] = true;
                        queue.push((t + 1, Some(j)));
                    }
                }
            }
            Some(i) => {
                for &(from, to) in &dynamics {
                    if from == i && t + 1 <= h && !visited_state[(t + 1) * d + to] {
                        visited_state[(t + 1) * d + to] = true;
                        queue.push((t + 1, Some(to)));
                    }
                }
                // Synchronic edges act within slices t ≥ 1 (slice-0 values
                // are initial conditions), which is automatic here: only
                // slices ≥ 1 are ever reached from an action.
                for &(from, to) in &synchronic {
                    if from == i && !visited_state[t * d + to] {
                        visited_state[t * d + to] = true;
                        queue.push((t, Some(to)));
                    }
                }
                for &p in &policy {
                    if p == i && t < h && !visited_action[t] {
                        visited_action[t] = true;
                        queue.push((t, None));
                    }
                }
            }
        }
    }
    let connected: Vec<bool> = (0..d)
        .map(|i| (0..=h).any(|t| visited_state[t * d + i]))
        .collect();
    Ok((0..d).filter(|i| !connected[*i]).collect())
}

/// Which restricted template an exo/endo partition satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemplateMatch {
    /// No edge of kind endo→exo′, action→exo′, or endo′→exo′; the synchronic
    /// exo′→endo′ influence is allowed.
    Full,
    /// As `Full`, additionally without any exo′→endo′ edge.
    Diachronic,
    /// Some edge breaks the exogeneity of the proposed partition.
    None,
}

/// Classifies the edge set against the restricted templates induced by
/// declaring `exo` the exogenous variable set.
pub fn template_match(template: &DbnTemplate, exo: &[usize]) -> Result<TemplateMatch> {
    template.validate()?;
    let d = template.n_variables;
    if exo.iter().any(|i| *i >= d) {
        return Err(AnalysisError::InvalidParam(format!(
            "exogenous index set names a variable outside 0..{d}"
        )));
    }
    let mut is_exo = vec![false; d];
    for &i in exo {
        is_exo[i] = true;
    }
    let mut synchronic_exo_to_endo = false;
    for (from, to) in &template.edges {
        match (from, to) {
            (DbnNode::Current(i), DbnNode::Next(j)) if is_exo[*j] && !is_exo[*i] => {
                return Ok(TemplateMatch::None);
            }
            (DbnNode::Action, DbnNode::Next(j)) if is_exo[*j] => {
                return Ok(TemplateMatch::None);
            }
            (DbnNode::Next(i), DbnNode::Next(j)) if is_exo[*j] && !is_exo[*i] => {
                return Ok(TemplateMatch::None);
            }
            (DbnNode::Next(i), DbnNode::Next(j)) if is_exo[*i] && !is_exo[*j] => {
                synchronic_exo_to_endo = true;
            }
            _ => {}
        }
    }
    Ok(if synchronic_exo_to_endo { TemplateMatch::Full } else { TemplateMatch::Diachronic })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use DbnNode::{Action, Current, Next};

    /// Three variables: 0 fed by 1, 1 self-evolving, 2 action-driven. The
    /// first two are structurally exogenous (only jointly valid, since 0
    /// leaks 1).
    pub(crate) fn two_exogenous_one_driven() -> DbnTemplate {
        DbnTemplate::new(
            3,
            vec![
                (Current(0), Next(0)),
                (Current(1), Next(0)),
                (Current(1), Next(1)),
                (Current(2), Next(2)),
                (Action, Next(2)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn driven_variable_is_the_only_connected_one() {
        assert_eq!(action_disconnected(&two_exogenous_one_driven()).unwrap(), vec![0, 1]);
    }

    #[test]
    fn fully_connected_template_has_no_exogenous_variables() {
        let d = 3;
        let mut edges = Vec::new();
        for i in 0..d {
            for j in 0..d {
                edges.push((Current(i), Next(j)));
            }
            edges.push((Action, Next(i)));
            edges.push((Current(i), Action));
        }
        let template = DbnTemplate::new(d, edges).unwrap();
        assert!(action_disconnected(&template).unwrap().is_empty());
    }

    #[test]
    fn action_free_chain_is_entirely_exogenous() {
        let template = DbnTemplate::new(
            3,
            vec![(Current(0), Next(1)), (Current(1), Next(2)), (Current(2), Next(0))],
        )
        .unwrap();
        assert_eq!(action_disconnected(&template).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn policy_edges_propagate_action_influence() {
        // The action drives 0; the policy reads 0; so later actions carry the
        // influence of earlier ones, but 1 stays out of reach.
        let template = DbnTemplate::new(
            2,
            vec![
                (Action, Next(0)),
                (Current(0), Action),
                (Current(1), Next(1)),
            ],
        )
        .unwrap();
        assert_eq!(action_disconnected(&template).unwrap(), vec![1]);
    }

    #[test]
    fn synchronic_cycles_are_structure_errors() {
        let result = DbnTemplate::new(2, vec![(Next(0), Next(1)), (Next(1), Next(0))]);
        assert!(matches!(result, Err(AnalysisError::Structure(_))));
    }

    #[test]
    fn primed_to_unprimed_edges_are_rejected() {
        let result = DbnTemplate::new(2, vec![(Next(0), Current(1))]);
        assert!(matches!(result, Err(AnalysisError::Structure(_))));
    }

    #[test]
    fn template_classification_distinguishes_full_and_diachronic() {
        // Variable 0 exogenous, variable 1 endogenous.
        let base = vec![
            (Current(0), Next(0)),
            (Current(0), Next(1)),
            (Current(1), Next(1)),
            (Action, Next(1)),
        ];
        let diachronic = DbnTemplate::new(2, base.clone()).unwrap();
        assert_eq!(template_match(&diachronic, &[0]).unwrap(), TemplateMatch::Diachronic);

        let mut with_synchronic = base.clone();
        with_synchronic.push((Next(0), Next(1)));
        let full = DbnTemplate::new(2, with_synchronic).unwrap();
        assert_eq!(template_match(&full, &[0]).unwrap(), TemplateMatch::Full);

        let mut broken = base;
        broken.push((Action, Next(0)));
        let none = DbnTemplate::new(2, broken).unwrap();
        assert_eq!(template_match(&none, &[0]).unwrap(), TemplateMatch::None);
    }

    #[test]
    fn subset_partitions_can_fail_while_supersets_match() {
        // Synchronic feed 1′ → 0′ with both exogenous: declaring only {0}
        // exogenous breaks (endo′→exo′), declaring {0, 1} matches.
        let template = DbnTemplate::new(
            3,
            vec![
                (Current(0), Next(0)),
                (Current(1), Next(1)),
                (Next(1), Next(0)),
                (Current(2), Next(2)),
                (Action, Next(2)),
            ],
        )
        .unwrap();
        assert_eq!(template_match(&template, &[0]).unwrap(), TemplateMatch::None);
        assert_eq!(template_match(&template, &[0, 1]).unwrap(), TemplateMatch::Diachronic);
    }

    fn arbitrary_template() -> impl Strategy<Value = DbnTemplate> {
        (2usize..5).prop_flat_map(|d| {
            let edge = prop_oneof![
                (0..d, 0..d).prop_map(|(i, j)| (Current(i), Next(j))),
                (0..d).prop_map(|i| (Current(i), Action)),
                (0..d).prop_map(|j| (Action, Next(j))),
                // i < j keeps the synchronic subgraph acyclic by construction.
                (0..d, 0..d).prop_filter_map("needs i < j", |(i, j)| {
                    (i < j).then_some((Next(i), Next(j)))
                }),
            ];
            proptest::collection::vec(edge, 0..12)
                .prop_map(move |edges| DbnTemplate::new(d, edges).unwrap())
        })
    }

    proptest! {
        /// Removing edges can only disconnect more variables from the
        /// action, never fewer.
        #[test]
        fn edge_deletion_never_shrinks_the_exogenous_set(
            template in arbitrary_template(),
            keep_mask in proptest::collection::vec(any::<bool>(), 12),
        ) {
            let full = action_disconnected(&template).unwrap();
            let kept: Vec<_> = template
                .edges
                .iter()
                .enumerate()
                .filter(|(k, _)| *keep_mask.get(*k).unwrap_or(&true))
                .map(|(_, e)| *e)
                .collect();
            let reduced = DbnTemplate::new(template.n_variables, kept).unwrap();
            let larger = action_disconnected(&reduced).unwrap();
            for i in &full {
                prop_assert!(larger.contains(i));
            }
        }
    }
}
