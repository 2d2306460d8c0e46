use serde::Serialize;

use crate::error::{Error, Result};
use crate::sphere::SphereGrid;

use super::{ChartPoint, DataFamily};

/// Splits `f(x)` into `((f(x) − f(−x))/2, (f(x) + f(−x))/2)`.
pub fn parity_decompose<F>(f: F, x: &ChartPoint, r0: f64) -> Result<(Vec<f64>, Vec<f64>)>
where
    F: Fn(&ChartPoint) -> Result<Vec<f64>>,
{
    if x.norm() <= r0 {
        return Err(Error::Domain(format!(
            "parity needs |x| > R0 (|x| = {}, R0 = {r0})",
            x.norm()
        )));
    }
    let plus = f(x)?;
    let minus = f(&ChartPoint(-x.0))?;
    if plus.len() != minus.len() {
        return Err(Error::Input("sampler returned inconsistent sizes".into()));
    }
    let odd = plus.iter().zip(&minus).map(|(a, b)| 0.5 * (a - b)).collect();
    let even = plus.iter().zip(&minus).map(|(a, b)| 0.5 * (a + b)).collect();
    Ok((odd, even))
}

/// Least-squares power law `value ≈ prefactor · radius^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub exponent: f64,
    pub prefactor: f64,
    /// Root-mean-square residual in log space.
    pub rms: f64,
}

/// Fits the slope of `log(value)` against `log(radius)`.
pub fn decay_exponent_fit(samples: &[(f64, f64)]) -> Result<DecayFit> {
    if samples.len() < 4 {
        return Err(Error::Input(format!(
            "decay fit needs at least 4 samples, got {}",
            samples.len()
        )));
    }
    if let Some((r, v)) = samples.iter().find(|(r, v)| !(*v > 0.0) || !(*r > 0.0)) {
        return Err(Error::Fit(format!(
            "decay fit needs positive samples, got value {v:e} at radius {r}"
        )));
    }
    let (rmin, rmax) = samples
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), (r, _)| (lo.min(*r), hi.max(*r)));
    if rmax < 10.0 * rmin * (1.0 - 1e-12) {
        return Err(Error::Input(format!(
            "decay fit radii must span a decade ({rmin}..{rmax})"
        )));
    }
    let n = samples.len() as f64;
    let xs: Vec<f64> = samples.iter().map(|(r, _)| r.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|(_, v)| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rms = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - icpt - slope * x).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(DecayFit {
        exponent: slope,
        prefactor: icpt.exp(),
        rms,
    })
}

fn frob(odd: &[f64]) -> f64 {
    odd.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn metric_components(family: &DataFamily, x: &ChartPoint) -> Result<Vec<f64>> {
    let j = family.metric_at(x)?;
    Ok(j.g.iter().flatten().copied().collect())
}

fn momentum_components(family: &DataFamily, x: &ChartPoint) -> Result<Vec<f64>> {
    let j = family.momentum_at(x)?;
    Ok(j.pi.iter().flatten().copied().collect())
}

fn sup_over_sphere<F>(grid: &SphereGrid, r: f64, r0: f64, f: F, odd: bool) -> Result<(f64, f64)>
where
    F: Fn(&ChartPoint) -> Result<Vec<f64>> + Sync,
{
    use rayon::prelude::*;
    let vals: Result<Vec<(f64, f64)>> = grid
        .nodes()
        .par_iter()
        .map(|w| {
            let x = ChartPoint(w * r);
            let (o, e) = parity_decompose(&f, &x, r0)?;
            let full = f(&x)?;
            let part = if odd { frob(&o) } else { frob(&e) };
            Ok((part, frob(&full)))
        })
        .collect();
    Ok(vals?
        .into_iter()
        .fold((0.0f64, 0.0f64), |(a, b), (p, q)| (a.max(p), b.max(q))))
}

/// `sup_{|x| = r} |g^odd|` (Frobenius norm), together with `sup |g − δ|`.
pub fn metric_odd_sup(family: &DataFamily, grid: &SphereGrid, r: f64) -> Result<(f64, f64)> {
    let f = |x: &ChartPoint| -> Result<Vec<f64>> {
        let mut c = metric_components(family, x)?;
        c[0] -= 1.0;
        c[4] -= 1.0;
        c[8] -= 1.0;
        Ok(c)
    };
    sup_over_sphere(grid, r, family.r0(), f, true)
}

/// `sup_{|x| = r} |π^even|`, together with `sup |π|`.
pub fn momentum_even_sup(family: &DataFamily, grid: &SphereGrid, r: f64) -> Result<(f64, f64)> {
    let f = |x: &ChartPoint| momentum_components(family, x);
    sup_over_sphere(grid, r, family.r0(), f, false)
}

/// Slope tolerance used when comparing fitted exponents with asymptotic rates.
pub const SLOPE_TOLERANCE: f64 = 0.2;

/// Relative level below which a parity part is treated as identically zero.
const PARITY_ZERO_LEVEL: f64 = 1e-12;

/// Empirical check of the parity (RT) decay conditions over a radius schedule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RtCheck {
    pub radii: Vec<f64>,
    pub metric_odd: Vec<f64>,
    pub momentum_even: Vec<f64>,
    /// `None` when the odd part vanishes to rounding at every radius.
    pub metric_odd_fit: Option<DecayFit>,
    pub momentum_even_fit: Option<DecayFit>,
    pub required_metric_exponent: f64,
    pub required_momentum_exponent: f64,
    pub accepted: bool,
    pub detail: String,
}

fn judge(
    samples: &[(f64, f64)],
    full: &[f64],
    required: f64,
    what: &str,
) -> Result<(Option<DecayFit>, bool, String)> {
    let scale = full.iter().fold(0.0f64, |m, v| m.max(*v));
    let top = samples.iter().fold(0.0f64, |m, (_, v)| m.max(*v));
    if top <= PARITY_ZERO_LEVEL * scale.max(f64::MIN_POSITIVE) || top == 0.0 {
        return Ok((None, true, format!("{what} vanishes identically")));
    }
    let fit = decay_exponent_fit(samples)?;
    let ok = fit.exponent <= required + SLOPE_TOLERANCE;
    let msg = format!(
        "{what} decays with exponent {:.3} (required <= {:.3})",
        fit.exponent, required
    );
    Ok((Some(fit), ok, msg))
}

/// Fits the decay of `g^odd` and `π^even` over `radii` and compares with
/// `|x|^{-1-q}` and `|x|^{-2-q}`.
pub fn rt_check(family: &DataFamily, grid: &SphereGrid, radii: &[f64]) -> Result<RtCheck> {
    let q = family.q();
    let mut odd = Vec::with_capacity(radii.len());
    let mut full_h = Vec::with_capacity(radii.len());
    for &r in radii {
        let (o, f) = metric_odd_sup(family, grid, r)?;
        odd.push(o);
        full_h.push(f);
    }
    let odd_samples: Vec<(f64, f64)> = radii.iter().copied().zip(odd.iter().copied()).collect();
    let (mfit, mok, mmsg) = judge(&odd_samples, &full_h, -(1.0 + q), "metric odd part")?;

    let (mut even, mut pfit, mut pok) = (Vec::new(), None, true);
    let pmsg;
    if family.has_momentum() {
        let mut full_p = Vec::with_capacity(radii.len());
        for &r in radii {
            let (e, f) = momentum_even_sup(family, grid, r)?;
            even.push(e);
            full_p.push(f);
        }
        if full_p.iter().all(|v| *v == 0.0) {
            pmsg = "momentum vanishes".into();
        } else {
            let s: Vec<(f64, f64)> = radii.iter().copied().zip(even.iter().copied()).collect();
            let (f, ok, msg) = judge(&s, &full_p, -(2.0 + q), "momentum even part")?;
            pfit = f;
            pok = ok;
            pmsg = msg;
        }
    } else {
        pmsg = "momentum not provided".into();
    }
    Ok(RtCheck {
        radii: radii.to_vec(),
        metric_odd: odd,
        momentum_even: even,
        metric_odd_fit: mfit,
        momentum_even_fit: pfit,
        required_metric_exponent: -(1.0 + q),
        required_momentum_exponent: -(2.0 + q),
        accepted: mok && pok,
        detail: format!("{mmsg}; {pmsg}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Vec3;

    #[test]
    fn constant_is_even() {
        let (o, e) = parity_decompose(|_| Ok(vec![3.0]), &ChartPoint::new(5.0, 0.0, 0.0), 1.0)
            .unwrap();
        assert_eq!(o, vec![0.0]);
        assert_eq!(e, vec![3.0]);
    }

    #[test]
    fn coordinate_is_odd() {
        let x = ChartPoint::new(5.0, 2.0, -1.0);
        let (o, e) = parity_decompose(|p| Ok(vec![p.0.x]), &x, 1.0).unwrap();
        assert_eq!(o, vec![5.0]);
        assert_eq!(e, vec![0.0]);
    }

    #[test]
    fn inside_chart_is_a_domain_error() {
        let r = parity_decompose(|_| Ok(vec![1.0]), &ChartPoint::new(0.5, 0.0, 0.0), 1.0);
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn centered_schwarzschild_has_no_odd_part() {
        let f = DataFamily::schwarzschild(1.0, Vec3::zeros()).unwrap();
        let x = ChartPoint::new(13.0, -7.0, 4.0);
        let (o, _) = parity_decompose(|p| metric_components(&f, p), &x, f.r0()).unwrap();
        assert!(o.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn exact_power_law() {
        let s: Vec<(f64, f64)> = [10.0, 20.0, 40.0, 80.0, 160.0]
            .iter()
            .map(|r: &f64| (*r, 3.0 * r.powi(-2)))
            .collect();
        let fit = decay_exponent_fit(&s).unwrap();
        assert!((fit.exponent + 2.0).abs() < 1e-12);
        assert!((fit.prefactor - 3.0).abs() < 1e-10);
    }

    #[test]
    fn fit_input_errors() {
        let few = [(10.0, 1.0), (100.0, 0.1), (1000.0, 0.01)];
        assert!(matches!(decay_exponent_fit(&few), Err(Error::Input(_))));
        let neg = [(10.0, 1.0), (20.0, -0.1), (40.0, 0.01), (100.0, 0.001)];
        assert!(matches!(decay_exponent_fit(&neg), Err(Error::Fit(_))));
        let narrow = [(10.0, 1.0), (11.0, 0.9), (12.0, 0.8), (13.0, 0.7)];
        assert!(matches!(decay_exponent_fit(&narrow), Err(Error::Input(_))));
    }
}
