//! Shared fixtures for the criterion benches.

use asymflat::{DataFamily, HarmonicCoefficients, Perturbation, Vec3};

/// Unit-mass Schwarzschild translated off the origin.
pub fn translated_schwarzschild() -> DataFamily {
    DataFamily::schwarzschild(1.0, Vec3::new(3.0, -2.0, 5.0)).expect("valid parameters")
}

/// Centered Schwarzschild with a quadrupolar perturbation.
pub fn perturbed_schwarzschild() -> DataFamily {
    let base = DataFamily::schwarzschild(1.0, Vec3::zeros()).expect("valid parameters");
    DataFamily::perturbed(base, 1.0, Perturbation::Quadrupole { rate: 2.0 }).expect("valid parameters")
}

/// Deterministic coefficients with a `1/(1 + l)²` spectrum.
pub fn smooth_coefficients(lmax: usize) -> HarmonicCoefficients {
    let mut c = HarmonicCoefficients::zeros(lmax);
    for l in 0..=lmax {
        for m in -(l as i64)..=(l as i64) {
            let phase = ((l * 7 + (m + l as i64) as usize * 3) % 11) as f64 / 11.0 - 0.5;
            c.set(l, m, phase / ((1 + l) * (1 + l)) as f64);
        }
    }
    c
}
