use crate::error::Result;
use crate::jet::{radius, Jet};
use crate::Vec3;

use super::{ChartPoint, DataFamily, FamilyKind, MetricJet, MomentumJet, Perturbation};

type SymJet = [[Jet; 3]; 3];

fn isotropic(factor: Jet) -> SymJet {
    let mut g = [[Jet::ZERO; 3]; 3];
    for (i, row) in g.iter_mut().enumerate() {
        row[i] = factor;
    }
    g
}

fn to_metric_jet(g: &SymJet) -> MetricJet {
    let mut out = MetricJet {
        g: [[0.0; 3]; 3],
        dg: [[[0.0; 3]; 3]; 3],
        ddg: [[[[0.0; 3]; 3]; 3]; 3],
    };
    for i in 0..3 {
        for j in i..3 {
            let c = &g[i][j];
            out.g[i][j] = c.v;
            out.g[j][i] = c.v;
            out.dg[i][j] = c.g;
            out.dg[j][i] = c.g;
            out.ddg[i][j] = c.h;
            out.ddg[j][i] = c.h;
        }
    }
    out
}

fn shifted(x: &ChartPoint, c: &Vec3) -> [Jet; 3] {
    Jet::coordinates([x.0.x - c.x, x.0.y - c.y, x.0.z - c.z])
}

/// Smooth step in `|x|`: zero for `|x| <= r0`, one for `|x| >= 2 r0`.
pub(crate) fn cutoff(r: Jet, r0: f64) -> Jet {
    let t = (r - r0) / r0;
    if t.v <= 0.0 {
        Jet::ZERO
    } else if t.v >= 1.0 {
        Jet::constant(1.0)
    } else {
        let a = (-t.recip()).exp();
        let b = (-(Jet::constant(1.0) - t).recip()).exp();
        a / (a + b)
    }
}

fn schwarzschild_u(x: &ChartPoint, mass: f64, center: &Vec3) -> Jet {
    let y = shifted(x, center);
    radius(&y).recip() * (0.5 * mass) + 1.0
}

fn harmonic_u(x: &ChartPoint, h: &super::HarmonicAsymptotics) -> Jet {
    let y = Jet::coordinates(x.as_array());
    let r = radius(&y);
    let inv = r.recip();
    let inv3 = inv.powi(3);
    let inv5 = inv.powi(5);
    let mut dip = Jet::ZERO;
    let mut quad = Jet::ZERO;
    for i in 0..3 {
        dip += y[i] * h.b[i];
        for j in 0..3 {
            if h.quadrupole[(i, j)] != 0.0 {
                quad += y[i] * y[j] * h.quadrupole[(i, j)];
            }
        }
    }
    inv * h.a + dip * inv3 + quad * inv5 + 1.0
}

pub(crate) fn conformal_factor(family: &DataFamily, x: &ChartPoint) -> Option<Jet> {
    match family.kind() {
        FamilyKind::Flat => Some(Jet::constant(1.0)),
        FamilyKind::SchwarzschildIsotropic { mass, center } => {
            Some(schwarzschild_u(x, *mass, center))
        }
        FamilyKind::HarmonicAsymptotics(h) => Some(harmonic_u(x, h)),
        _ => None,
    }
}

/// Kerr `t = const` slice in quasi-isotropic form:
/// `g = A δ + a² (ρ² + 2 M r)/(ρ² r̄⁴) η ⊗ η`, with `η = (−y, x, 0)`,
/// `r = r̄ + M + (M² − a²)/(4 r̄)` the Boyer–Lindquist radius,
/// `ρ² = r² + a² cos²θ` and `A = ρ²/r̄²`.
fn kerr_metric(x: &ChartPoint, mass: f64, spin: f64, center: &Vec3) -> SymJet {
    let y = shifted(x, center);
    let rb = radius(&y);
    let k = 0.25 * (mass * mass - spin * spin);
    let r_bl = rb + mass + rb.recip() * k;
    let cos = y[2] / rb;
    let rho2 = r_bl * r_bl + cos * cos * (spin * spin);
    let a_fac = rho2 / (rb * rb);
    let b_fac = (rho2 + r_bl * (2.0 * mass)) * (spin * spin) / (rho2 * rb.powi(4));
    let eta = [-y[1], y[0], Jet::ZERO];
    let mut g = [[Jet::ZERO; 3]; 3];
    for i in 0..3 {
        for j in i..3 {
            let mut c = b_fac * eta[i] * eta[j];
            if i == j {
                c += a_fac;
            }
            g[i][j] = c;
            g[j][i] = c;
        }
    }
    g
}

/// Metric perturbation of a profile, before the `eps · χ` factor.
fn profile_metric(profile: &Perturbation, x: &[Jet; 3], r: Jet) -> SymJet {
    match *profile {
        Perturbation::Even { rate } => {
            let w = (x[2] * x[2]) / (r * r) + 1.0;
            isotropic(w * r.powf(-rate))
        }
        Perturbation::Odd { rate } => isotropic(x[2] * r.powf(-rate - 1.0)),
        Perturbation::Quadrupole { rate } => {
            isotropic((x[0] * x[0] - x[1] * x[1]) * r.powf(-rate - 2.0))
        }
        Perturbation::Gauge { q } => {
            // ξ = s·A(x) + t·T(x), s = r^{-q}, t = r^{-q-2}
            // ∂_j ξ_i = s ∂_j A_i − q r^{-q-2} x_j A_i + t ∂_j T_i − (q+2) r^{-q-4} x_j T_i
            let s = r.powf(-q);
            let sd = r.powf(-q - 2.0) * q;
            let t = r.powf(-q - 2.0);
            let td = r.powf(-q - 4.0) * (q + 2.0);
            let lin = [x[0], -x[1], Jet::ZERO];
            let lin_grad = [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 0.0]];
            let quad = [x[1] * x[2], x[2] * x[0], x[0] * x[1]];
            // ∂_j T_i
            let quad_grad = |i: usize, j: usize| -> Jet {
                match (i, j) {
                    (0, 1) => x[2],
                    (0, 2) => x[1],
                    (1, 0) => x[2],
                    (1, 2) => x[0],
                    (2, 0) => x[1],
                    (2, 1) => x[0],
                    _ => Jet::ZERO,
                }
            };
            let dxi = |i: usize, j: usize| -> Jet {
                s * lin_grad[i][j] - sd * x[j] * lin[i] + t * quad_grad(i, j)
                    - td * x[j] * quad[i]
            };
            let mut h = [[Jet::ZERO; 3]; 3];
            for i in 0..3 {
                for j in i..3 {
                    let c = dxi(i, j) + dxi(j, i);
                    h[i][j] = c;
                    h[j][i] = c;
                }
            }
            h
        }
    }
}

const EVEN_MOMENTUM_DIRECTION: [f64; 3] = [1.0, 0.5, 0.0];

fn symjet(family: &DataFamily, x: &ChartPoint) -> SymJet {
    match family.kind() {
        FamilyKind::Flat => isotropic(Jet::constant(1.0)),
        FamilyKind::SchwarzschildIsotropic { mass, center } => {
            isotropic(schwarzschild_u(x, *mass, center).powi(4))
        }
        FamilyKind::HarmonicAsymptotics(h) => isotropic(harmonic_u(x, h).powi(4)),
        FamilyKind::KerrSpatial { mass, spin, center } => kerr_metric(x, *mass, *spin, center),
        FamilyKind::RtViolating { mass, q, amp, dir } => {
            let y = Jet::coordinates(x.as_array());
            let r = radius(&y);
            let u4 = schwarzschild_u(x, *mass, &Vec3::zeros()).powi(4);
            let odd = (y[0] * dir.x + y[1] * dir.y + y[2] * dir.z) * r.powf(-q - 1.0);
            isotropic(u4 + cutoff(r, family.r0()) * odd * *amp)
        }
        FamilyKind::Perturbed { .. } | FamilyKind::Transformed { .. } => {
            unreachable!("composite families are handled on MetricJet")
        }
    }
}

/// `eps · χ · h_profile` with its derivatives (no `δ` added).
pub(crate) fn perturbation_term(eps: f64, profile: &Perturbation, r0: f64, x: &ChartPoint) -> MetricJet {
    let y = Jet::coordinates(x.as_array());
    let r = radius(&y);
    let chi = cutoff(r, r0) * eps;
    let h = profile_metric(profile, &y, r);
    let mut hj = [[Jet::ZERO; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            hj[i][j] = chi * h[i][j];
        }
    }
    to_metric_jet(&hj)
}

pub(crate) fn metric_jet(family: &DataFamily, x: &ChartPoint) -> Result<MetricJet> {
    if let FamilyKind::Transformed {
        base,
        rotation,
        translation,
    } = family.kind()
    {
        let xb = ChartPoint(rotation.transpose() * (x.0 - translation));
        let b = metric_jet(base, &xb)?;
        return Ok(rotate_metric(&b, rotation));
    }
    if let FamilyKind::Perturbed { base, eps, profile } = family.kind() {
        let mut g = metric_jet(base, x)?;
        if *eps != 0.0 {
            let p = perturbation_term(*eps, profile, family.r0(), x);
            for i in 0..3 {
                for j in 0..3 {
                    g.g[i][j] += p.g[i][j];
                    for k in 0..3 {
                        g.dg[i][j][k] += p.dg[i][j][k];
                        for l in 0..3 {
                            g.ddg[i][j][k][l] += p.ddg[i][j][k][l];
                        }
                    }
                }
            }
        }
        return Ok(g);
    }
    Ok(to_metric_jet(&symjet(family, x)))
}

fn rotate_metric(b: &MetricJet, o: &crate::Mat3) -> MetricJet {
    let mut out = MetricJet::flat();
    for a in 0..3 {
        for bb in a..3 {
            let mut g = 0.0;
            let mut dg = [0.0; 3];
            let mut ddg = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    let w = o[(a, i)] * o[(bb, j)];
                    if w == 0.0 {
                        continue;
                    }
                    g += w * b.g[i][j];
                    for c in 0..3 {
                        for k in 0..3 {
                            let wk = w * o[(c, k)];
                            if wk == 0.0 {
                                continue;
                            }
                            dg[c] += wk * b.dg[i][j][k];
                            for d in c..3 {
                                for l in 0..3 {
                                    ddg[c][d] += wk * o[(d, l)] * b.ddg[i][j][k][l];
                                }
                            }
                        }
                    }
                }
            }
            for c in 0..3 {
                for d in 0..c {
                    ddg[c][d] = ddg[d][c];
                }
            }
            out.g[a][bb] = g;
            out.g[bb][a] = g;
            out.dg[a][bb] = dg;
            out.dg[bb][a] = dg;
            out.ddg[a][bb] = ddg;
            out.ddg[bb][a] = ddg;
        }
    }
    out
}

fn harmonic_momentum(x: &ChartPoint, h: &super::HarmonicAsymptotics) -> MomentumJet {
    let y = Jet::coordinates(x.as_array());
    let r = radius(&y);
    let inv = r.recip();
    let inv3 = inv.powi(3);
    let mut xs = [Jet::ZERO; 3];
    for (i, xi) in xs.iter_mut().enumerate() {
        let mut d = Jet::ZERO;
        for j in 0..3 {
            if h.x_dipole[(i, j)] != 0.0 {
                d += y[j] * h.x_dipole[(i, j)];
            }
        }
        *xi = inv * h.x_monopole[i] + d * inv3;
    }
    let u = harmonic_u(x, h);
    let u2 = u.v * u.v;
    let du2 = [2.0 * u.v * u.g[0], 2.0 * u.v * u.g[1], 2.0 * u.v * u.g[2]];
    let div = xs[0].g[0] + xs[1].g[1] + xs[2].g[2];
    let ddiv = [
        xs[0].h[0][0] + xs[1].h[1][0] + xs[2].h[2][0],
        xs[0].h[0][1] + xs[1].h[1][1] + xs[2].h[2][1],
        xs[0].h[0][2] + xs[1].h[1][2] + xs[2].h[2][2],
    ];
    let mut out = MomentumJet::zero();
    for i in 0..3 {
        for j in i..3 {
            let delta = if i == j { 1.0 } else { 0.0 };
            let s = xs[i].g[j] + xs[j].g[i] - div * delta;
            let mut ds = [0.0; 3];
            for k in 0..3 {
                let dsk = xs[i].h[j][k] + xs[j].h[i][k] - ddiv[k] * delta;
                ds[k] = du2[k] * s + u2 * dsk;
            }
            out.pi[i][j] = u2 * s;
            out.pi[j][i] = u2 * s;
            out.dpi[i][j] = ds;
            out.dpi[j][i] = ds;
        }
    }
    out
}

pub(crate) fn momentum_jet(family: &DataFamily, x: &ChartPoint) -> Result<MomentumJet> {
    Ok(match family.kind() {
        FamilyKind::Flat
        | FamilyKind::SchwarzschildIsotropic { .. }
        | FamilyKind::RtViolating { .. } => MomentumJet::zero(),
        FamilyKind::HarmonicAsymptotics(h) => harmonic_momentum(x, h),
        FamilyKind::KerrSpatial { .. } => unreachable!("capability checked by caller"),
        FamilyKind::Perturbed { base, eps, profile } => {
            let mut out = momentum_jet(base, x)?;
            if let (Perturbation::Even { rate }, true) = (profile, *eps != 0.0) {
                let y = Jet::coordinates(x.as_array());
                let r = radius(&y);
                let w = cutoff(r, family.r0()) * r.powf(-rate - 2.0) * *eps;
                let d = EVEN_MOMENTUM_DIRECTION;
                for i in 0..3 {
                    for j in i..3 {
                        let c = w * (y[i] * d[j] + y[j] * d[i]);
                        out.pi[i][j] += c.v;
                        for k in 0..3 {
                            out.dpi[i][j][k] += c.g[k];
                        }
                        if i != j {
                            out.pi[j][i] = out.pi[i][j];
                            out.dpi[j][i] = out.dpi[i][j];
                        }
                    }
                }
            }
            out
        }
        FamilyKind::Transformed {
            base,
            rotation,
            translation,
        } => {
            let xb = ChartPoint(rotation.transpose() * (x.0 - translation));
            let b = momentum_jet(base, &xb)?;
            let o = rotation;
            let mut out = MomentumJet::zero();
            for a in 0..3 {
                for bb in a..3 {
                    let mut p = 0.0;
                    let mut dp = [0.0; 3];
                    for i in 0..3 {
                        for j in 0..3 {
                            let w = o[(a, i)] * o[(bb, j)];
                            p += w * b.pi[i][j];
                            for c in 0..3 {
                                for k in 0..3 {
                                    dp[c] += w * o[(c, k)] * b.dpi[i][j][k];
                                }
                            }
                        }
                    }
                    out.pi[a][bb] = p;
                    out.pi[bb][a] = p;
                    out.dpi[a][bb] = dp;
                    out.dpi[bb][a] = dp;
                }
            }
            out
        }
    })
}
