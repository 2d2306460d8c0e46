mod common;

use std::f64::consts::PI;

use asymflat::sphere::{helmholtz_apply, helmholtz_solve};
use asymflat::*;
use common::{monomial_integral, random_coefficients as coefficients};
use proptest::prelude::*;

#[test]
fn monomial_integrals_closed_form() {
    assert!((monomial_integral(0, 0, 0) - 4.0 * PI).abs() < 1e-15);
    assert!((monomial_integral(2, 0, 0) - 4.0 * PI / 3.0).abs() < 1e-15);
    assert!((monomial_integral(2, 2, 0) - 4.0 * PI / 15.0).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn quadrature_exact_to_twice_lmax(lmax in 4usize..=32, a in 0u32..=64, b in 0u32..=64, c in 0u32..=64) {
        prop_assume!(a + b + c <= 2 * lmax as u32);
        let g = build_grid(lmax).unwrap();
        let vals = g.sample(|w| w[0].powi(a as i32) * w[1].powi(b as i32) * w[2].powi(c as i32));
        let got = g.integrate(&vals).unwrap();
        let want = monomial_integral(a, b, c);
        prop_assert!((got - want).abs() <= 1e-13 * 4.0 * PI, "{a} {b} {c}: {got} vs {want}");
    }

    #[test]
    fn product_of_band_limited_functions(lmax in 4usize..=24, s1 in any::<u64>(), s2 in any::<u64>()) {
        // Degree 2·lmax integrand: ∫ f g dω = Σ f_lm g_lm for orthonormal harmonics.
        let g = build_grid(lmax).unwrap();
        let (f, h) = (coefficients(lmax, s1), coefficients(lmax, s2));
        let (fv, hv) = (g.sht_inverse(&f).unwrap(), g.sht_inverse(&h).unwrap());
        let prod: Vec<f64> = fv.iter().zip(&hv).map(|(a, b)| a * b).collect();
        let want: f64 = f.as_slice().iter().zip(h.as_slice()).map(|(a, b)| a * b).sum();
        prop_assert!((g.integrate(&prod).unwrap() - want).abs() < 1e-11 * (1.0 + want.abs()));
    }

    #[test]
    fn transform_round_trip(lmax in 4usize..=32, seed in any::<u64>()) {
        let g = build_grid(lmax).unwrap();
        let c = coefficients(lmax, seed);
        let back = g.sht_forward(&g.sht_inverse(&c).unwrap()).unwrap();
        let err = c.add_scaled(&back, -1.0).norm();
        prop_assert!(err <= 1e-10, "round trip error {err:e}");
    }

    #[test]
    fn antipodal_parity(lmax in 4usize..=20, seed in any::<u64>()) {
        let g = build_grid(lmax).unwrap();
        let c = coefficients(lmax, seed);
        let flipped = g.sht_forward(&g.sample(|w| c.evaluate(&(-w)))).unwrap();
        for l in 0..=lmax {
            let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
            for m in -(l as i64)..=(l as i64) {
                prop_assert!((flipped.get(l, m) - sign * c.get(l, m)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn rotation_preserves_degree_blocks(lmax in 4usize..=16, seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0, e in -3.0f64..3.0) {
        let g = build_grid(lmax).unwrap();
        let c = coefficients(lmax, seed);
        let rot = nalgebra::Rotation3::from_euler_angles(a, b, e);
        let turned = g.sht_forward(&g.sample(|w| c.evaluate(&(rot.inverse() * w)))).unwrap();
        for l in 0..=lmax {
            prop_assert!((turned.block_norm(l) - c.block_norm(l)).abs() < 1e-10, "l = {l}");
        }
    }

    #[test]
    fn helmholtz_blocks_are_exact(lmax in 2usize..=32, seed in any::<u64>(), r in 1.0f64..1000.0) {
        let c = coefficients(lmax, seed);
        let psi = helmholtz_solve(&c, r, L1Policy::ProjectOut).unwrap();
        prop_assert_eq!(psi.block_norm(1), 0.0);
        let back = helmholtz_apply(&psi, r);
        for l in 0..=lmax {
            for m in -(l as i64)..=(l as i64) {
                let want = if l == 1 { 0.0 } else { c.get(l, m) };
                prop_assert!((back.get(l, m) - want).abs() <= 1e-12 * (1.0 + want.abs()));
            }
        }
        let rejected = matches!(helmholtz_solve(&c, r, L1Policy::Reject), Err(Error::KernelObstruction { .. }));
        prop_assert!(rejected);
    }
}
