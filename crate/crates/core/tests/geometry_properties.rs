//! Invariants of the isoparametric catalogue on random points and levels.

use proptest::prelude::*;
use yamabe_core::geometry::{
    cartan_munzner_residual, classify_level_set, euler_check, identity_residuals, phi_eval, sample_points,
    LevelSetDescriptor, Regularity, SpecVariant,
};
use yamabe_core::suites::geometry_specs;

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    /// `⟨grad φ, grad φ⟩ = b(φ)` holds to roundoff at every sample point.
    #[test]
    fn gradient_identity_holds(seed in any::<u64>()) {
        for spec in geometry_specs() {
            for z in sample_points(&spec, 8, seed) {
                let r = identity_residuals(&spec, &z, 1e-3).unwrap();
                prop_assert!(r.grad_residual <= 1e-12, "{} at {:?}: {}", spec.variant.name(), z, r.grad_residual);
            }
        }
    }

    /// The level through a sample point is never empty, and a regular level
    /// is a hypersurface.
    #[test]
    fn levels_through_points_are_hypersurfaces(seed in any::<u64>()) {
        for spec in geometry_specs() {
            for z in sample_points(&spec, 8, seed) {
                let c = phi_eval(&spec, &z).unwrap();
                let d = classify_level_set(&spec, c).unwrap();
                prop_assert!(!matches!(d, LevelSetDescriptor::Empty), "{} at c={}", spec.variant.name(), c);
                if d.regularity() == Some(Regularity::RegularHypersurface) {
                    prop_assert_eq!(d.dim(spec.m), Some(spec.m - 1), "{} at c={}: {}", spec.variant.name(), c, d);
                }
            }
        }
    }

    /// Homogeneous variants satisfy Euler's relation off the pseudosphere too.
    #[test]
    fn euler_relation(z in prop::collection::vec(-3.0f64..3.0, 7)) {
        for spec in geometry_specs() {
            if matches!(spec.variant, SpecVariant::FlatParabolic { .. }) {
                continue;
            }
            let z = &z[..spec.ambient_dim()];
            prop_assert!(euler_check(&spec, z).unwrap() <= 1e-12, "{}", spec.variant.name());
        }
    }

    /// Cartan-Münzner gradient identity at arbitrary ambient points.
    #[test]
    fn cartan_munzner_gradient(z in prop::collection::vec(-3.0f64..3.0, 7)) {
        for spec in geometry_specs().into_iter().filter(|s| s.is_pseudosphere()) {
            let z = &z[..spec.ambient_dim()];
            prop_assert!(cartan_munzner_residual(&spec, z).unwrap() <= 1e-12, "{}", spec.variant.name());
        }
    }
}
