//! Analytic jets against Richardson-extrapolated central differences.

mod common;

use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jets_match_finite_differences(r in 10.0f64..100.0, t in 0.05f64..3.09, p in 0.0f64..std::f64::consts::TAU) {
        let x = common::point(r, t, p);
        for f in common::catalog() {
            let (e, at) = common::jet_error(&f, &x);
            prop_assert!(e <= 1e-6, "relative error {e:e}: {at}");
        }
    }
}
