use manifold::{random_stiefel, retract, tangent_project};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn dims() -> impl Strategy<Value = (usize, usize)> {
    (1usize..7).prop_flat_map(|d| (Just(d), 1usize..=d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Tangent projection lands in the tangent space: WᵀT is skew-symmetric.
    #[test]
    fn tangent_projection_is_skew((d, p) in dims(), seed in any::<u64>(), entries in proptest::collection::vec(-10.0f64..10.0, 49)) {
        let w = random_stiefel(d, p, seed).unwrap();
        let g = DMatrix::from_fn(d, p, |i, j| entries[i * p + j]);
        let t = tangent_project(&w, &g).unwrap();
        let s = w.matrix().transpose() * &t + t.transpose() * w.matrix();
        prop_assert!(s.amax() < 1e-9, "skew residual {}", s.amax());
    }

    /// Tangent projection is idempotent.
    #[test]
    fn tangent_projection_is_idempotent((d, p) in dims(), seed in any::<u64>(), entries in proptest::collection::vec(-10.0f64..10.0, 49)) {
        let w = random_stiefel(d, p, seed).unwrap();
        let g = DMatrix::from_fn(d, p, |i, j| entries[i * p + j]);
        let once = tangent_project(&w, &g).unwrap();
        let twice = tangent_project(&w, &once).unwrap();
        prop_assert!((&once - &twice).amax() < 1e-9);
    }

    /// Retraction returns a point with orthonormal columns.
    #[test]
    fn retraction_preserves_orthonormality((d, p) in dims(), seed in any::<u64>(), entries in proptest::collection::vec(-2.0f64..2.0, 49)) {
        let w = random_stiefel(d, p, seed).unwrap();
        let g = DMatrix::from_fn(d, p, |i, j| entries[i * p + j]);
        let t = tangent_project(&w, &g).unwrap();
        if let Ok(r) = retract(&w, &t) {
            prop_assert!(r.residual() < 1e-10, "residual {}", r.residual());
        }
    }

    /// Seeded sampling is orthonormal and reproducible.
    #[test]
    fn random_points_are_valid_and_reproducible((d, p) in dims(), seed in any::<u64>()) {
        let a = random_stiefel(d, p, seed).unwrap();
        let b = random_stiefel(d, p, seed).unwrap();
        prop_assert_eq!(a.matrix(), b.matrix());
        prop_assert!(a.residual() < 1e-10);
    }
}
