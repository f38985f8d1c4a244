//! Randomized property checks for the statistical kernels: covariance
//! symmetry and positive semidefiniteness, exact CCC argument symmetry, and
//! non-negativity of the exact tabular CMI.

use nalgebra::DMatrix;
use proptest::prelude::*;
use statcore::{ccc, cmi_tabular, covariance, cross_covariance, CccParams, CmiMode, SampleMatrix, TabularModel};

fn matrix_strategy(max_n: usize, max_p: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (2..=max_n, 1..=max_p).prop_flat_map(|(n, p)| {
        prop::collection::vec(-10.0..10.0f64, n * p)
            .prop_map(move |v| DMatrix::from_vec(n, p, v))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn covariance_is_symmetric_and_psd(data in matrix_strategy(24, 5)) {
        let cov = covariance(&SampleMatrix::new(data).unwrap());
        let diff = &cov - cov.transpose();
        prop_assert!(diff.iter().all(|v| v.abs() <= 1e-12));
        let eig = cov.symmetric_eigen();
        prop_assert!(eig.eigenvalues.iter().all(|&ev| ev >= -1e-9));
    }

    #[test]
    fn cross_covariance_transposes_with_its_arguments(
        data in matrix_strategy(24, 4),
        seed in 0u64..1000,
    ) {
        let n = data.nrows();
        let other = DMatrix::from_fn(n, 3, |i, j| {
            ((i * 31 + j * 17 + seed as usize) % 13) as f64 - 6.0
        });
        let x = SampleMatrix::new(data).unwrap();
        let y = SampleMatrix::new(other).unwrap();
        let xy = cross_covariance(&x, &y).unwrap();
        let yx = cross_covariance(&y, &x).unwrap();
        prop_assert_eq!(xy, yx.transpose());
    }

    #[test]
    fn ccc_is_exactly_symmetric_in_x_and_y(
        x in matrix_strategy(32, 3),
        seed in 0u64..1000,
    ) {
        let n = x.nrows();
        let y = DMatrix::from_fn(n, 2, |i, j| ((i * 7 + j * 3 + seed as usize) % 11) as f64);
        let z = DMatrix::from_fn(n, 2, |i, j| ((i * 5 + j * 13 + seed as usize) % 9) as f64);
        let x = SampleMatrix::new(x).unwrap();
        let y = SampleMatrix::new(y).unwrap();
        let z = SampleMatrix::new(z).unwrap();
        let params = CccParams::default();
        let forward = ccc(&x, &y, &z, &params).unwrap();
        let backward = ccc(&y, &x, &z, &params).unwrap();
        prop_assert_eq!(forward.to_bits(), backward.to_bits());
        prop_assert!(forward >= 0.0);
    }

    #[test]
    fn tabular_cmi_is_nonnegative(
        raw in prop::collection::vec(0.0..1.0f64, 4 * 2 * 4),
    ) {
        let total: f64 = raw.iter().sum();
        prop_assume!(total > 1e-6);
        let joint: Vec<f64> = raw.iter().map(|p| p / total).collect();
        // Renormalize exactly enough for the 1e-12 gate.
        let correction: f64 = joint.iter().sum();
        let joint: Vec<f64> = joint.iter().map(|p| p / correction).collect();
        let model = TabularModel::from_joint(vec![2, 2], 2, joint).unwrap();
        for set in [vec![0usize], vec![1], vec![0, 1]] {
            for mode in [CmiMode::Full, CmiMode::Diachronic] {
                let est = cmi_tabular(&model, &set, mode).unwrap();
                prop_assert!(est.nats >= 0.0);
            }
        }
    }
}
