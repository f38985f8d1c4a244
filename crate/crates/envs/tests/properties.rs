use envs::{Environment, LinearMdp, LinearMdpConfig, RoutingMdp, RoutingMdpConfig};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// The hidden exogenous chain is a function of the seed alone: whatever
    /// actions are taken, replaying the same noise gives the same x path.
    #[test]
    fn exo_chain_is_action_invariant(
        seed in any::<u64>(),
        m in 1usize..5,
        n in 1usize..5,
        actions_a in proptest::collection::vec(0usize..10, 30),
        actions_b in proptest::collection::vec(0usize..10, 30),
    ) {
        let mut env_a = LinearMdp::new(LinearMdpConfig::new(m, n, seed)).unwrap();
        let mut env_b = LinearMdp::new(LinearMdpConfig::new(m, n, seed)).unwrap();
        for (a, b) in actions_a.iter().zip(&actions_b) {
            env_a.step(&[*a]).unwrap();
            env_b.step(&[*b]).unwrap();
        }
        prop_assert_eq!(env_a.hidden_exo(), env_b.hidden_exo());
    }

    /// Observations always invert back to the hidden state.
    #[test]
    fn observation_inverts_to_hidden_state(seed in any::<u64>(), steps in 1usize..40) {
        let mut env = LinearMdp::new(LinearMdpConfig::new(3, 4, seed)).unwrap();
        let mut obs = env.reset();
        for t in 0..steps {
            obs = env.step(&[t % 10]).unwrap().observation;
        }
        let inv = env.mixing_matrix().clone().try_inverse().unwrap();
        let hidden = inv * obs;
        for i in 0..3 {
            prop_assert!((hidden[i] - env.hidden_endo()[i]).abs() < 1e-8);
        }
        for i in 0..4 {
            prop_assert!((hidden[3 + i] - env.hidden_exo()[i]).abs() < 1e-8);
        }
    }

    /// Routing episodes end within 5 steps under any action choices.
    #[test]
    fn routing_terminates_within_five_steps(
        seed in any::<u64>(),
        stochastic in any::<bool>(),
        choices in proptest::collection::vec(0usize..3, 10),
    ) {
        let mut env = RoutingMdp::new(RoutingMdpConfig::new(stochastic, seed)).unwrap();
        env.reset();
        let mut steps = 0;
        for &c in &choices {
            let valid = env.valid_action_counts()[0];
            let out = env.step(&[c.min(valid - 1)]).unwrap();
            steps += 1;
            if out.terminal {
                break;
            }
        }
        prop_assert!(steps <= 5);
    }
}
