//! Oracles shared by the property suites and the acceptance target.
#![allow(dead_code)]

use std::f64::consts::PI;

use asymflat::initial_data::MetricJet;
use asymflat::*;

/// One family of every kind, with nontrivial parameters.
pub fn catalog() -> Vec<DataFamily> {
    let sch = DataFamily::schwarzschild(1.0, Vec3::new(0.5, -0.3, 0.2)).unwrap();
    let h = HarmonicAsymptotics::new(0.6, Vec3::new(0.2, -0.1, 0.3))
        .with_quadrupole(Mat3::new(0.1, 0.02, 0.0, 0.02, -0.05, 0.01, 0.0, 0.01, -0.05))
        .with_shift(
            Vec3::new(0.1, 0.05, -0.02),
            Mat3::new(0.0, 0.3, -0.2, -0.3, 0.0, 0.1, 0.2, -0.1, 0.0),
        );
    let rot = nalgebra::Rotation3::from_euler_angles(0.3, -0.7, 1.1).into_inner();
    vec![
        DataFamily::flat(),
        sch.clone(),
        DataFamily::harmonic(h, 5.0).unwrap(),
        DataFamily::kerr(1.0, 0.6, Vec3::zeros()).unwrap(),
        DataFamily::rt_violating(1.0, 0.75, 0.5, Vec3::new(0.0, 0.0, 1.0), 5.0).unwrap(),
        DataFamily::perturbed(sch.clone(), 0.3, Perturbation::Even { rate: 1.1 }).unwrap(),
        DataFamily::perturbed(sch.clone(), 0.3, Perturbation::Odd { rate: 1.0 }).unwrap(),
        DataFamily::perturbed(sch.clone(), 0.3, Perturbation::Quadrupole { rate: 2.0 }).unwrap(),
        DataFamily::perturbed(sch, 0.3, Perturbation::Gauge { q: 0.75 }).unwrap(),
        DataFamily::transformed(DataFamily::harmonic(h, 5.0).unwrap(), rot, Vec3::new(1.0, 2.0, -1.0)).unwrap(),
    ]
}

/// Richardson-extrapolated central difference of `f` along `e_k`.
pub fn richardson<const N: usize, F: Fn(&Vec3) -> [f64; N]>(f: F, x: &Vec3, k: usize, h: f64) -> [f64; N] {
    let d = |h: f64| {
        let mut e = Vec3::zeros();
        e[k] = h;
        let (a, b) = (f(&(x + e)), f(&(x - e)));
        let mut out = [0.0; N];
        for i in 0..N {
            out[i] = (a[i] - b[i]) / (2.0 * h);
        }
        out
    };
    let (d1, d2) = (d(h), d(h / 2.0));
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = (4.0 * d2[i] - d1[i]) / 3.0;
    }
    out
}

fn flat_g(j: &MetricJet) -> [f64; 9] {
    let mut o = [0.0; 9];
    for i in 0..3 {
        for l in 0..3 {
            o[3 * i + l] = j.g[i][l];
        }
    }
    o
}

fn flat_dg(j: &MetricJet) -> [f64; 27] {
    let mut o = [0.0; 27];
    for i in 0..3 {
        for l in 0..3 {
            for k in 0..3 {
                o[9 * i + 3 * l + k] = j.dg[i][l][k];
            }
        }
    }
    o
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

/// Largest `|fd − jet| / max|jet|` over the first and second metric
/// derivatives and the first momentum derivatives at `x` (step `0.01 |x|`).
/// Exactly vanishing jets are compared absolutely.
pub fn jet_error(f: &DataFamily, x: &Vec3) -> (f64, String) {
    let h = 0.01 * x.norm();
    let rel = |fd: &[f64], exact: &[f64], scale: f64| {
        let d = fd.iter().zip(exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if scale > 0.0 { d / scale } else { d }
    };
    let jet = |y: &Vec3| f.metric_at(&ChartPoint(*y)).unwrap();
    let j = jet(x);
    let mut dd = Vec::with_capacity(81);
    for i in 0..3 {
        for l in 0..3 {
            for k in 0..3 {
                for m in 0..3 {
                    dd.push(j.ddg[i][l][k][m]);
                }
            }
        }
    }
    let (ds, dds) = (max_abs(&flat_dg(&j)), max_abs(&dd));
    let mut worst = (0.0, String::new());
    let mut note = |e: f64, what: &str| {
        if e > worst.0 {
            worst = (e, format!("{} {what} at {:?}", f.name(), x.as_slice()));
        }
    };
    for k in 0..3 {
        let fd = richardson(|y| flat_g(&jet(y)), x, k, h);
        let exact: Vec<f64> = (0..9).map(|c| j.dg[c / 3][c % 3][k]).collect();
        note(rel(&fd, &exact, ds), "dg");
        let fd = richardson(|y| flat_dg(&jet(y)), x, k, h);
        let exact: Vec<f64> = (0..27).map(|c| j.ddg[c / 9][(c / 3) % 3][c % 3][k]).collect();
        note(rel(&fd, &exact, dds), "ddg");
    }
    if f.has_momentum() {
        let pj = |y: &Vec3| f.momentum_at(&ChartPoint(*y)).unwrap();
        let p = pj(x);
        let mut d = Vec::with_capacity(27);
        for i in 0..3 {
            for l in 0..3 {
                for k in 0..3 {
                    d.push(p.dpi[i][l][k]);
                }
            }
        }
        let s = max_abs(&d);
        for k in 0..3 {
            let fd = richardson(
                |y| {
                    let m = pj(y);
                    let mut o = [0.0; 9];
                    for i in 0..3 {
                        for l in 0..3 {
                            o[3 * i + l] = m.pi[i][l];
                        }
                    }
                    o
                },
                x,
                k,
                h,
            );
            let exact: Vec<f64> = (0..9).map(|c| p.dpi[c / 3][c % 3][k]).collect();
            note(rel(&fd, &exact, s), "dπ");
        }
    }
    worst
}

pub fn point(r: f64, theta: f64, phi: f64) -> Vec3 {
    Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()) * r
}

/// `(n − 1)!!` with `(−1)!! = 1`.
fn odd_double_factorial(n: u32) -> f64 {
    let mut p = 1.0;
    let mut k = n as i64 - 1;
    while k > 1 {
        p *= k as f64;
        k -= 2;
    }
    p
}

/// `∫ x^a y^b z^c dω` over the unit sphere.
pub fn monomial_integral(a: u32, b: u32, c: u32) -> f64 {
    if a % 2 == 1 || b % 2 == 1 || c % 2 == 1 {
        return 0.0;
    }
    4.0 * PI * odd_double_factorial(a) * odd_double_factorial(b) * odd_double_factorial(c)
        / odd_double_factorial(a + b + c + 2)
}

pub fn random_coefficients(lmax: usize, seed: u64) -> HarmonicCoefficients {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let a = (0..(lmax + 1) * (lmax + 1)).map(|_| rng.random_range(-1.0..1.0)).collect();
    HarmonicCoefficients::from_flat(lmax, a).unwrap()
}
