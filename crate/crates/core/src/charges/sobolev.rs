use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::initial_data::{ChartPoint, DataFamily, MetricJet};
use crate::jet::Jet;
use crate::sphere::{gauss_legendre, pairwise_sum, SphereGrid};

/// Gauss points in `ln r` per dyadic shell.
const RADIAL_POINTS: usize = 16;
/// Dyadic shells summed before an infinite tail is declared divergent.
const MAX_SHELLS: usize = 64;
/// Shell ratios at or above this count as non-decaying.
const MAX_RATIO: f64 = 0.999;
/// Allowed spread of the last shell ratios before the tail is extrapolated geometrically.
const RATIO_SPREAD: f64 = 0.05;

/// A field sampled as a list of scalar components with exact derivatives.
pub type SobolevSampler<'a> = Box<dyn Fn(&ChartPoint) -> Result<Vec<Jet>> + Sync + Send + 'a>;

/// Radial extent of a weighted norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Annulus {
    Finite { inner: f64, outer: f64 },
    Infinite { inner: f64 },
}

impl Annulus {
    pub fn inner(&self) -> f64 {
        match *self {
            Annulus::Finite { inner, .. } | Annulus::Infinite { inner } => inner,
        }
    }
}

/// Result of a weighted Sobolev norm evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SobolevNorm {
    /// `‖f‖_{W^{k,p}_{−q}}`; `∞` when the tail diverges.
    pub value: f64,
    /// `∫ Σ_j (|D^j f| ρ^{j+q})^p ρ^{−3} dx` (the sup itself for `p = ∞`).
    pub integral: f64,
    pub converged: bool,
    /// Partial integrals over `[a, a·2^k]` (sup over the shell for `p = ∞`).
    pub partial: Vec<f64>,
}

/// Frobenius norms of the value, gradient and Hessian over all components.
fn derivative_norms(jets: &[Jet]) -> [f64; 3] {
    let mut n = [0.0; 3];
    for j in jets {
        n[0] += j.v * j.v;
        for a in 0..3 {
            n[1] += j.g[a] * j.g[a];
            for b in 0..3 {
                n[2] += j.h[a][b] * j.h[a][b];
            }
        }
    }
    n.map(f64::sqrt)
}

#[derive(Clone, Copy)]
struct Order {
    k: usize,
    p: f64,
    q: f64,
}

/// Integral of the density over `lo ≤ |x| ≤ hi` (the sup for `p = ∞`).
fn shell(
    f: &(dyn Fn(&ChartPoint) -> Result<Vec<Jet>> + Sync),
    grid: &SphereGrid,
    Order { k, p, q }: Order,
    (lo, hi): (f64, f64),
    gl: &(Vec<f64>, Vec<f64>),
) -> Result<f64> {
    let (l0, l1) = (lo.ln(), hi.ln());
    let half = 0.5 * (l1 - l0);
    let mid = 0.5 * (l1 + l0);
    let per_radius: Result<Vec<f64>> = gl
        .0
        .par_iter()
        .zip(&gl.1)
        .map(|(t, wt)| {
            let r = (mid + half * t).exp();
            let mut vals = Vec::with_capacity(grid.len());
            for w in grid.nodes() {
                let d = derivative_norms(&f(&ChartPoint(w * r))?);
                let terms = (0..=k).map(|j| d[j] * r.powf(j as f64 + q));
                vals.push(if p.is_infinite() {
                    terms.fold(0.0, f64::max)
                } else {
                    terms.map(|t| t.powf(p)).sum()
                });
            }
            if p.is_infinite() {
                Ok(vals.into_iter().fold(0.0, f64::max))
            } else {
                // dx = r³ d(ln r) dω cancels the ρ^{−3} weight.
                Ok(grid.integrate(&vals)? * wt * half)
            }
        })
        .collect();
    let per_radius = per_radius?;
    Ok(if p.is_infinite() {
        per_radius.into_iter().fold(0.0, f64::max)
    } else {
        pairwise_sum(&per_radius)
    })
}

/// Weighted Sobolev norm `W^{k,p}_{−q}` of a sampled field over an annulus, with
/// weight `ρ = |x|`. Quadrature is Gauss–Legendre in `ln r` on dyadic shells times `grid`.
pub fn weighted_sobolev_norm(
    f: &(dyn Fn(&ChartPoint) -> Result<Vec<Jet>> + Sync),
    k: usize,
    p: f64,
    q: f64,
    annulus: Annulus,
    grid: &SphereGrid,
) -> Result<SobolevNorm> {
    if k > 2 {
        return Err(Error::Config(format!("Sobolev order k = {k} is not supported (k <= 2)")));
    }
    if !(p >= 1.0) {
        return Err(Error::Config(format!("exponent p = {p} must be at least 1")));
    }
    let a = annulus.inner();
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::Input(format!("annulus inner radius {a} must be positive")));
    }
    let gl = gauss_legendre(RADIAL_POINTS);
    let order = Order { k, p, q };
    let sup = p.is_infinite();
    let combine = |acc: f64, s: f64| if sup { acc.max(s) } else { acc + s };
    let finish = |integral: f64, converged: bool, partial: Vec<f64>| {
        let value = if !converged {
            f64::INFINITY
        } else if sup {
            integral
        } else {
            integral.powf(1.0 / p)
        };
        SobolevNorm {
            value,
            integral: if converged { integral } else { f64::INFINITY },
            converged,
            partial,
        }
    };

    match annulus {
        Annulus::Finite { inner, outer } => {
            if !(outer > inner) {
                return Err(Error::Input(format!("empty annulus [{inner}, {outer}]")));
            }
            let mut acc = 0.0;
            let mut partial = Vec::new();
            let mut lo = inner;
            while lo < outer {
                let hi = (2.0 * lo).min(outer);
                acc = combine(acc, shell(f, grid, order, (lo, hi), &gl)?);
                partial.push(acc);
                lo = hi;
                if (outer - lo) <= 1e-14 * outer {
                    break;
                }
            }
            Ok(finish(acc, true, partial))
        }
        Annulus::Infinite { inner } => {
            let mut acc = 0.0;
            let mut partial = Vec::new();
            let mut last = Vec::new();
            let mut lo = inner;
            for _ in 0..MAX_SHELLS {
                let s = shell(f, grid, order, (lo, 2.0 * lo), &gl)?;
                acc = combine(acc, s);
                partial.push(acc);
                last.push(s);
                lo *= 2.0;
                if let Some(done) = tail_converged(&last, sup) {
                    let total = if sup { acc } else { acc + done };
                    return Ok(finish(total, true, partial));
                }
            }
            Ok(finish(acc, false, partial))
        }
    }
}

/// Geometric tail estimate once the shell contributions decay at a stable ratio;
/// `None` while undecided.
fn tail_converged(shells: &[f64], sup: bool) -> Option<f64> {
    let n = shells.len();
    if n < 6 {
        return None;
    }
    let s = &shells[n - 5..];
    if s.iter().all(|v| *v == 0.0) {
        return Some(0.0);
    }
    if sup {
        // Shell sups that stop growing no longer move the maximum.
        return s.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9)).then_some(0.0);
    }
    if s.iter().any(|v| !(*v > 0.0)) {
        return None;
    }
    let ratios: Vec<f64> = s.windows(2).map(|w| w[1] / w[0]).collect();
    let hi = ratios.iter().fold(0.0f64, |m, r| m.max(*r));
    let lo = ratios.iter().fold(f64::INFINITY, |m, r| m.min(*r));
    if !(hi < MAX_RATIO) || hi - lo > RATIO_SPREAD * hi {
        return None;
    }
    let rho = ratios[ratios.len() - 1];
    Some(s[4] * rho / (1.0 - rho))
}

fn metric_components(j: &MetricJet) -> Vec<Jet> {
    tensor_components(j, true)
}

/// The nine components of `j.g` (minus `δ` if requested) as jets.
fn tensor_components(j: &MetricJet, minus_identity: bool) -> Vec<Jet> {
    let mut out = Vec::with_capacity(9);
    for a in 0..3 {
        for b in 0..3 {
            let shift = if minus_identity && a == b { 1.0 } else { 0.0 };
            let mut jet = Jet::constant(j.g[a][b] - shift);
            for k in 0..3 {
                jet.g[k] = j.dg[a][b][k];
                for l in 0..3 {
                    jet.h[k][l] = j.ddg[a][b][k][l];
                }
            }
            out.push(jet);
        }
    }
    out
}

/// Components of `h = g − δ` with their derivatives.
pub fn metric_perturbation_sampler(family: &DataFamily) -> SobolevSampler<'_> {
    Box::new(move |x| Ok(metric_components(&family.metric_at(x)?)))
}

/// Components of the added term `g − g_base` of a perturbed family.
pub fn perturbation_sampler(family: &DataFamily) -> Result<SobolevSampler<'_>> {
    if family.perturbation_at(&ChartPoint::new(0.0, 0.0, 2.0 * family.r0()))?.is_none() {
        return Err(Error::Input(format!("family '{}' is not a perturbation", family.name())));
    }
    Ok(Box::new(move |x| {
        let p = family.perturbation_at(x)?.expect("perturbed family");
        Ok(tensor_components(&p, false))
    }))
}

/// Components of `g − ḡ` for two families on a common chart.
pub fn metric_difference_sampler<'a>(a: &'a DataFamily, b: &'a DataFamily) -> SobolevSampler<'a> {
    Box::new(move |x| {
        let ja = metric_components(&a.metric_at(x)?);
        let jb = metric_components(&b.metric_at(x)?);
        Ok(ja.into_iter().zip(jb).map(|(u, v)| u - v).collect())
    })
}

/// Odd part `½ (f(x) − f(−x))` of a sampled field.
pub fn odd_part<'a>(inner: SobolevSampler<'a>) -> SobolevSampler<'a> {
    Box::new(move |x| {
        let plus = inner(x)?;
        let minus = inner(&ChartPoint(-x.0))?;
        Ok(plus
            .into_iter()
            .zip(minus)
            .map(|(u, mut v)| {
                // x ↦ f(−x) has gradient −∇f(−x) and Hessian ∇²f(−x).
                v.g = v.g.map(|c| -c);
                (u - v).scale(0.5)
            })
            .collect())
    })
}

/// Odd part of `h = g − δ`.
pub fn odd_part_sampler(family: &DataFamily) -> SobolevSampler<'_> {
    odd_part(metric_perturbation_sampler(family))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::jet::radius;
    use crate::sphere::build_grid;
    use crate::Vec3;

    fn power(s: f64) -> SobolevSampler<'static> {
        Box::new(move |x| Ok(vec![radius(&Jet::coordinates(x.as_array())).powf(-s)]))
    }

    #[test]
    fn zero_field() {
        let g = build_grid(6).unwrap();
        let f: SobolevSampler = Box::new(|_| Ok(vec![Jet::ZERO; 3]));
        let n = weighted_sobolev_norm(&*f, 2, 2.0, 1.0, Annulus::Finite { inner: 10.0, outer: 100.0 }, &g).unwrap();
        assert_eq!(n.value, 0.0);
    }

    #[test]
    fn radial_power_closed_form() {
        let g = build_grid(6).unwrap();
        let (s, q, a, b) = (1.3, 0.8, 10.0, 1000.0);
        let n = weighted_sobolev_norm(&*power(s), 0, 2.0, q, Annulus::Finite { inner: a, outer: b }, &g).unwrap();
        let e = 2.0 * (q - s);
        let exact = 4.0 * PI * (b.powf(e) - a.powf(e)) / e;
        assert!((n.integral - exact).abs() < 1e-8 * exact.abs(), "{} vs {exact}", n.integral);
    }

    #[test]
    fn infinite_annulus_finiteness() {
        let g = build_grid(4).unwrap();
        let a = 10.0;
        let conv = weighted_sobolev_norm(&*power(1.5), 0, 2.0, 1.0, Annulus::Infinite { inner: a }, &g).unwrap();
        assert!(conv.converged);
        let exact = 4.0 * PI * a.powf(-1.0);
        assert!((conv.integral - exact).abs() < 1e-8 * exact);
        for s in [1.0, 0.8] {
            let div = weighted_sobolev_norm(&*power(s), 0, 2.0, 1.0, Annulus::Infinite { inner: a }, &g).unwrap();
            assert!(!div.converged && div.value.is_infinite(), "s = {s}");
        }
    }

    #[test]
    fn derivative_orders_and_sup() {
        let g = build_grid(4).unwrap();
        // |∇ r^{-s}| = s r^{-s-1}, so every order contributes r^{q-s}.
        let (s, q) = (2.0, 1.0);
        let n = weighted_sobolev_norm(&*power(s), 1, f64::INFINITY, q, Annulus::Infinite { inner: 10.0 }, &g).unwrap();
        assert!(n.converged);
        assert!((n.value - 2.0 * 10f64.powf(q - s)).abs() < 0.02 * n.value, "{}", n.value);
    }

    #[test]
    fn unsupported_order() {
        let g = build_grid(4).unwrap();
        let r = weighted_sobolev_norm(&*power(1.0), 3, 2.0, 1.0, Annulus::Infinite { inner: 1.0 }, &g);
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn odd_part_of_centered_schwarzschild_vanishes() {
        let g = build_grid(6).unwrap();
        let f = DataFamily::schwarzschild(1.0, Vec3::zeros()).unwrap();
        let n = weighted_sobolev_norm(&*odd_part_sampler(&f), 2, 2.0, 1.0, Annulus::Finite { inner: 10.0, outer: 40.0 }, &g)
            .unwrap();
        assert!(n.value < 1e-12);
        let shifted = DataFamily::schwarzschild(1.0, Vec3::new(1.0, 0.0, 0.0)).unwrap();
        let m = weighted_sobolev_norm(
            &*odd_part_sampler(&shifted),
            2,
            2.0,
            1.0,
            Annulus::Finite { inner: 10.0, outer: 40.0 },
            &g,
        )
        .unwrap();
        assert!(m.value > 1e-3);
    }
}
