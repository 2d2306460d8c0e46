//! Extrapolation of finite-radius values to `r → ∞` and small least-squares fits.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};

/// A limit estimated from values sampled at increasing radii.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extrapolation {
    pub value: f64,
    /// Non-negative error estimate.
    pub error: f64,
    /// Leading decay exponent `s` of the fitted correction (0 when not fitted).
    pub exponent: f64,
}

impl Extrapolation {
    pub fn exact(value: f64) -> Self {
        Extrapolation {
            value,
            error: 0.0,
            exponent: 0.0,
        }
    }
}

const S_MIN: f64 = 0.1;
const S_MAX: f64 = 8.0;
const S_STEP: f64 = 0.05;

/// Solves `v = v∞ + a ρ^{-s} + b ρ^{-s-1}` through the first three points and
/// returns `(v∞, mismatch at the fourth point)`.
fn two_term_at(rho: &[f64; 4], v: &[f64; 4], s: f64) -> Option<(f64, f64)> {
    let m = Matrix3::from_fn(|i, j| match j {
        0 => 1.0,
        1 => rho[i].powf(-s),
        _ => rho[i].powf(-s - 1.0),
    });
    let rhs = Vector3::new(v[0], v[1], v[2]);
    let c = m.lu().solve(&rhs)?;
    let pred = c[0] + c[1] * rho[3].powf(-s) + c[2] * rho[3].powf(-s - 1.0);
    Some((c[0], pred - v[3]))
}

/// Solves `v = v∞ + a ρ^{-s}` through three points.
fn one_term_at(rho: &[f64; 3], v: &[f64; 3], s: f64) -> (f64, f64) {
    let (x0, x1, x2) = (rho[0].powf(-s), rho[1].powf(-s), rho[2].powf(-s));
    let a = (v[0] - v[1]) / (x0 - x1);
    let vinf = v[0] - a * x0;
    (vinf, vinf + a * x2 - v[2])
}

/// Scans `s` for sign changes of `mismatch(s)` and refines each by bisection.
fn roots<F: Fn(f64) -> Option<(f64, f64)>>(f: F) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let n = ((S_MAX - S_MIN) / S_STEP).round() as usize;
    let mut prev: Option<(f64, f64, f64)> = None;
    for k in 0..=n {
        let s = S_MIN + k as f64 * S_STEP;
        let Some((vinf, e)) = f(s) else {
            prev = None;
            continue;
        };
        if e == 0.0 {
            out.push((s, vinf));
        } else if let Some((sp, _, ep)) = prev {
            if ep != 0.0 && ep.signum() != e.signum() {
                let (mut lo, mut hi, mut elo) = (sp, s, ep);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    match f(mid) {
                        Some((_, em)) if em.signum() == elo.signum() => {
                            lo = mid;
                            elo = em;
                        }
                        Some(_) => hi = mid,
                        None => break,
                    }
                }
                let sr = 0.5 * (lo + hi);
                if let Some((v, _)) = f(sr) {
                    out.push((sr, v));
                }
            }
        }
        prev = Some((s, vinf, e));
    }
    out
}

/// Picks the root whose limit lies closest to the last sample.
fn closest(cands: &[(f64, f64)], last: f64) -> Option<(f64, f64)> {
    cands
        .iter()
        .copied()
        .filter(|(_, v)| v.is_finite())
        .min_by(|a, b| (a.1 - last).abs().total_cmp(&(b.1 - last).abs()))
}

fn window_two_term(r: &[f64], v: &[f64]) -> Option<(f64, f64)> {
    let scale = r[3];
    let rho = [r[0] / scale, r[1] / scale, r[2] / scale, r[3] / scale];
    let vv = [v[0], v[1], v[2], v[3]];
    closest(&roots(|s| two_term_at(&rho, &vv, s)), v[3])
}

fn window_one_term(r: &[f64], v: &[f64]) -> Option<(f64, f64)> {
    let scale = r[2];
    let rho = [r[0] / scale, r[1] / scale, r[2] / scale];
    let vv = [v[0], v[1], v[2]];
    closest(&roots(|s| Some(one_term_at(&rho, &vv, s))), v[2])
}

/// Extrapolates `values(radii)` to infinite radius.
///
/// The last four samples are matched by `v∞ + a r^{-s} + b r^{-s-1}` with `s`
/// free. The error estimate is the spread against the same fit on the
/// preceding window, or against a single-power fit on the last three samples
/// when only four are available.
pub fn extrapolate(radii: &[f64], values: &[f64]) -> Result<Extrapolation> {
    if radii.len() != values.len() {
        return Err(Error::Input(format!(
            "{} radii but {} values",
            radii.len(),
            values.len()
        )));
    }
    let n = radii.len();
    if n < 4 {
        return Err(Error::Input(format!(
            "extrapolation needs at least 4 radii, got {n}"
        )));
    }
    if radii.windows(2).any(|w| !(w[1] > w[0])) || !(radii[0] > 0.0) {
        return Err(Error::Input("radii must be positive and strictly increasing".into()));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Fit(format!("non-finite sample {v}")));
    }
    let last = values[n - 1];
    let tail = &values[n - 4..];
    let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = tail.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    // Values constant up to rounding: no correction to fit.
    if hi - lo <= 64.0 * f64::EPSILON * scale || hi == lo {
        return Ok(Extrapolation {
            value: last,
            error: hi - lo,
            exponent: 0.0,
        });
    }

    let primary = window_two_term(&radii[n - 4..], &values[n - 4..]);
    let secondary = if n >= 5 {
        window_two_term(&radii[n - 5..n - 1], &values[n - 5..n - 1])
            .or_else(|| window_one_term(&radii[n - 3..], &values[n - 3..]))
    } else {
        window_one_term(&radii[n - 3..], &values[n - 3..])
    };
    let step = (values[n - 1] - values[n - 2]).abs();
    match (primary, secondary) {
        (Some((s, v)), Some((_, v2))) => Ok(Extrapolation {
            value: v,
            error: (v - v2).abs(),
            exponent: s,
        }),
        (Some((s, v)), None) => Ok(Extrapolation {
            value: v,
            error: step,
            exponent: s,
        }),
        (None, Some((s, v))) => Ok(Extrapolation {
            value: v,
            error: (v - last).abs().max(step),
            exponent: s,
        }),
        // No power-law structure: report the last sample with the spread of the window.
        (None, None) => Ok(Extrapolation {
            value: last,
            error: hi - lo,
            exponent: 0.0,
        }),
    }
}

/// Component-wise extrapolation of 3-vectors.
pub fn extrapolate_vec(radii: &[f64], values: &[[f64; 3]]) -> Result<[Extrapolation; 3]> {
    let mut out = [Extrapolation::exact(0.0); 3];
    for (k, slot) in out.iter_mut().enumerate() {
        let comp: Vec<f64> = values.iter().map(|v| v[k]).collect();
        *slot = extrapolate(radii, &comp)?;
    }
    Ok(out)
}

/// Least-squares coefficients of `value ≈ Σ_k c_k r^{-powers[k]}`.
pub fn inverse_power_fit(radii: &[f64], values: &[f64], powers: &[i32]) -> Result<Vec<f64>> {
    if radii.len() != values.len() || radii.len() < powers.len() {
        return Err(Error::Input(format!(
            "{} samples cannot determine {} coefficients",
            radii.len().min(values.len()),
            powers.len()
        )));
    }
    // Columns are scaled by the largest radius to keep the system well conditioned.
    let rs = radii.iter().copied().fold(0.0f64, f64::max);
    let a = DMatrix::from_fn(radii.len(), powers.len(), |i, k| {
        (radii[i] / rs).powi(-powers[k])
    });
    let b = DVector::from_column_slice(values);
    let svd = a.svd(true, true);
    let c = svd
        .solve(&b, 1e-14)
        .map_err(|e| Error::Fit(format!("least squares failed: {e}")))?;
    Ok(c.iter()
        .zip(powers)
        .map(|(ck, p)| ck * rs.powi(*p))
        .collect())
}

/// Least-squares slope of `ln y` against `ln x`, using only pairs with both
/// positive. `None` with fewer than two such pairs.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}
