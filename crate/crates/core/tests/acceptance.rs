//! Acceptance suite: runs each criterion at its stated tolerance and prints
//! one PASS/FAIL line per criterion. Exits non-zero if any criterion fails.

mod common;

use std::sync::Arc;
use std::time::{Duration, Instant};

use asymflat::charges::*;
use asymflat::cmc::*;
use asymflat::fit::{extrapolate, inverse_power_fit, log_log_slope};
use asymflat::sphere::{helmholtz_apply, helmholtz_solve};
use asymflat::surface::{compute_geometry, mean_curvature_expansion};
use asymflat::*;

type Outcome = std::result::Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn e2s(e: Error) -> String {
    format!("error: {e}")
}

fn schedule() -> RadiusSchedule {
    RadiusSchedule::geometric(50.0, 2.0, 5).unwrap()
}

fn schwarzschild(c: Vec3) -> DataFamily {
    DataFamily::schwarzschild(1.0, c).unwrap()
}

fn spin_dipole() -> Mat3 {
    Mat3::new(0.0, 0.3, -0.2, -0.3, 0.0, 0.1, 0.2, -0.1, 0.0)
}

fn harmonic_a() -> HarmonicAsymptotics {
    HarmonicAsymptotics::new(0.5, Vec3::new(0.2, -0.1, 0.3))
}

fn harmonic_b() -> HarmonicAsymptotics {
    HarmonicAsymptotics::new(0.8, Vec3::new(-0.3, 0.4, 0.1))
        .with_quadrupole(Mat3::new(0.2, 0.05, 0.0, 0.05, -0.1, 0.02, 0.0, 0.02, -0.1))
}

fn perturbed_schwarzschild() -> DataFamily {
    DataFamily::perturbed(schwarzschild(Vec3::zeros()), 1.0, Perturbation::Quadrupole { rate: 2.0 }).unwrap()
}

fn c1_schwarzschild_mass() -> Outcome {
    let t = Instant::now();
    let g = build_grid(16).map_err(e2s)?;
    let m = adm_mass(&schwarzschild(Vec3::zeros()), &schedule(), &g).map_err(e2s)?;
    let el = t.elapsed();
    let err = (m.value - 1.0).abs();
    check(
        err <= 1e-6 && el < Duration::from_secs(5),
        format!("m = {:.9}, |m − 1| = {err:.2e}, {:.2} s", m.value, el.as_secs_f64()),
    )
}

fn c2_intrinsic_mass() -> Outcome {
    let g = build_grid(16).map_err(e2s)?;
    let families = [
        ("schwarzschild", schwarzschild(Vec3::zeros())),
        ("harmonic A", DataFamily::harmonic(harmonic_a(), 5.0).map_err(e2s)?),
        ("harmonic B", DataFamily::harmonic(harmonic_b(), 5.0).map_err(e2s)?),
    ];
    let mut ok = true;
    let mut parts = vec![];
    for (name, f) in &families {
        let m = adm_mass(f, &schedule(), &g).map_err(e2s)?;
        let mi = intrinsic_mass(f, &schedule(), &g).map_err(e2s)?;
        let rel = (mi.exact.value - m.value).abs() / m.value.abs();
        ok &= rel <= 1e-4;
        parts.push(format!("{name} {rel:.1e}"));
    }
    // Integrand per flat area at r = 20 against 4m/r².
    let grid = Arc::new(build_grid(8).map_err(e2s)?);
    let r = 20.0;
    let f = schwarzschild(Vec3::zeros());
    let s = RadialGraphSurface::sphere(Vec3::zeros(), r, grid).map_err(e2s)?;
    let geo = compute_geometry(&s, &f).map_err(e2s)?;
    let mut worst = 0.0f64;
    for n in &geo.nodes {
        let mut v = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let e = n.ricci[i][j] - 0.5 * n.scalar_curvature * n.metric[i][j];
                v += e * (-2.0 * n.position[i]) * n.normal[j];
            }
        }
        let per_flat = v * n.area_weight / n.flat_area_weight;
        worst = worst.max((per_flat * r * r / 4.0 - 1.0).abs());
    }
    ok &= worst <= 5e-4;
    check(ok, format!("|m_I − m|/m: {}; integrand vs 4m/r² at r = 20: {worst:.1e}", parts.join(", ")))
}

fn c3_center_covariance() -> Outcome {
    let g = build_grid(16).map_err(e2s)?;
    let c0 = Vec3::new(3.0, -2.0, 5.0);
    let f = schwarzschild(c0);
    let m = adm_mass(&f, &schedule(), &g).map_err(e2s)?;
    let c = center_of_mass_hamiltonian(&f, &schedule(), &g, m.value, false).map_err(e2s)?;
    let ci = intrinsic_center_on_spheres(&f, &schedule(), &g, m.value).map_err(e2s)?;
    let dc = (c.charge.vector() - c0).norm();
    let dci = (ci.exact.vector() - c0).norm();
    let rot = nalgebra::Rotation3::from_euler_angles(0.4, -0.2, 0.9).into_inner();
    let a = Vec3::new(1.0, -2.0, 0.5);
    let far = RadiusSchedule::geometric(100.0, 2.0, 5).unwrap();
    let rep = coordinate_transform_check(&f, rot, a, &far, &g).map_err(e2s)?;
    let dev_c = rep.center.as_ref().map(|v| v.deviation).unwrap_or(f64::INFINITY);
    let dev_ci = rep.intrinsic_center.as_ref().map(|v| v.deviation).unwrap_or(f64::INFINITY);
    check(
        dc <= 1e-3 && dci <= 1e-3 && dev_c <= 1e-3 && dev_ci <= 1e-3,
        format!("|C − c| = {dc:.1e}, |C_I − c| = {dci:.1e}; after O, a: |C' − (OC + a)| = {dev_c:.1e}, C_I {dev_ci:.1e}"),
    )
}

fn c4_center_identity() -> Outcome {
    let g = Arc::new(build_grid(16).map_err(e2s)?);
    let f = schwarzschild(Vec3::zeros());
    let p = Vec3::new(2.0, 0.0, 0.0);
    let radii = [50.0, 100.0, 200.0, 400.0, 800.0];
    let mut res = vec![];
    for &r in &radii {
        let v = center_identity_residual(&f, &p, r, 1.0, &Vec3::zeros(), Arc::clone(&g)).map_err(e2s)?;
        res.push(Vec3::from(v).norm());
    }
    let s = log_log_slope(&radii, &res).ok_or("slope undefined")?;
    let want = 1.0 - 2.0 * f.q();
    check((s - want).abs() <= 0.2, format!("slope {s:.3} (target {want} ± 0.2)"))
}

fn c5_mean_curvature_expansion() -> Outcome {
    let g = Arc::new(build_grid(16).map_err(e2s)?);
    let f = schwarzschild(Vec3::zeros());
    let radii = [50.0, 100.0, 200.0, 400.0];
    let mut vals = vec![];
    for &r in &radii {
        let s = RadialGraphSurface::sphere(Vec3::zeros(), r, Arc::clone(&g)).map_err(e2s)?;
        vals.push(compute_geometry(&s, &f).map_err(e2s)?.mean_h() - 2.0 / r);
    }
    let c = inverse_power_fit(&radii, &vals, &[2, 3, 4]).map_err(e2s)?;
    let c2_err = (c[0] + 4.0).abs() / 4.0;

    let p = Vec3::new(2.0, -1.0, 0.5);
    let radii = [50.0, 100.0, 200.0, 400.0, 800.0];
    let mut dis = vec![];
    for &r in &radii {
        let s = RadialGraphSurface::sphere(p, r, Arc::clone(&g)).map_err(e2s)?;
        let geo = compute_geometry(&s, &f).map_err(e2s)?;
        let mut worst = 0.0f64;
        for n in &geo.nodes {
            let h = mean_curvature_expansion(&f, &p, r, &ChartPoint(n.position)).map_err(e2s)?;
            worst = worst.max((h - n.mean_curvature).abs());
        }
        dis.push(worst);
    }
    let s = log_log_slope(&radii, &dis).ok_or("slope undefined")?;
    let bound = -(1.0 + 2.0 * f.q()) + 0.2;
    check(
        c2_err <= 0.01 && s <= bound,
        format!("c₂ = {:.4} (rel. error {c2_err:.1e}); expansion disagreement slope {s:.3} ≤ {bound}", c[0]),
    )
}

struct Leaves {
    radii: Vec<f64>,
    leaves: Vec<FoliationLeaf>,
    times: Vec<Duration>,
}

fn perturbed_leaves() -> std::result::Result<Leaves, String> {
    let f = perturbed_schwarzschild();
    let radii = vec![100.0, 200.0, 400.0, 800.0];
    let st = SolveSettings::default();
    let mut leaves = vec![];
    let mut times = vec![];
    for &r in &radii {
        let t = Instant::now();
        leaves.push(solve_cmc(&f, r, &st).map_err(e2s)?);
        times.push(t.elapsed());
    }
    Ok(Leaves { radii, leaves, times })
}

fn c6_cmc_construction(l: &Leaves) -> Outcome {
    let f = perturbed_schwarzschild();
    let mut ok = true;
    let mut dev = vec![];
    for k in 0..3 {
        let (r, leaf) = (l.radii[k], &l.leaves[k]);
        ok &= leaf.h_constancy <= 1e-9 * 2.0 / r;
        ok &= l.times[k] < Duration::from_secs(120);
        dev.push((leaf.h_target - 2.0 / r).abs());
    }
    let s = log_log_slope(&l.radii[..3], &dev).ok_or("slope undefined")?;
    let bound = -(1.0 + f.q()) + 0.2;
    ok &= s <= bound;
    let worst_t = l.times[..3].iter().max().unwrap().as_secs_f64();
    let worst_c = l.leaves[..3]
        .iter()
        .map(|x| x.h_constancy * x.radius / 2.0)
        .fold(0.0, f64::max);
    check(
        ok,
        format!("max |H − mean H|·R/2 = {worst_c:.1e}; |H − 2/R| slope {s:.3} ≤ {bound}; slowest leaf {worst_t:.2} s"),
    )
}

fn c7_geometric_center() -> Outcome {
    let g = build_grid(16).map_err(e2s)?;
    let mut ok = true;
    let mut parts = vec![];
    let cases = [
        (
            "translated schwarzschild",
            schwarzschild(Vec3::new(3.0, -2.0, 5.0)),
            Vec3::new(3.0, -2.0, 5.0),
            vec![50.0, 100.0, 200.0, 400.0, 800.0],
        ),
        (
            "harmonic A",
            DataFamily::harmonic(harmonic_a(), 5.0).map_err(e2s)?,
            harmonic_a().expected_center().unwrap(),
            vec![12.5, 25.0, 50.0, 100.0, 200.0, 400.0, 800.0],
        ),
    ];
    for (name, f, exact, radii) in &cases {
        let fol = foliation_sweep(f, radii, &SolveSettings::default()).map_err(e2s)?;
        let gc = geometric_center_limit(&fol.leaves).map_err(e2s)?;
        let m = adm_mass(f, &schedule(), &g).map_err(e2s)?;
        let c = center_of_mass_hamiltonian(f, &schedule(), &g, m.value, false).map_err(e2s)?;
        let dev = (gc.value() - c.charge.vector()).norm();
        ok &= dev <= 1e-3;
        // Decay of |centroid(R) − C| with C in closed form. Deviations below
        // 1000ε·R are rounding noise of the centroid and carry no slope.
        let (x, y): (Vec<f64>, Vec<f64>) = gc
            .centroids
            .iter()
            .zip(radii)
            .map(|(x, r)| (*r, (x - exact).norm()))
            .filter(|(r, d)| *d > 1000.0 * f64::EPSILON * r)
            .unzip();
        let bound = 1.0 - 2.0 * f.q() + 0.2;
        let slope = if x.is_empty() {
            "all deviations at rounding level".to_string()
        } else if x.len() >= 3 {
            let s = log_log_slope(&x, &y).ok_or("slope undefined")?;
            ok &= s <= bound;
            format!("slope {s:.2} ≤ {bound} over R ∈ [{}, {}]", x[0], x[x.len() - 1])
        } else {
            ok = false;
            format!("only {} resolved deviations", x.len())
        };
        parts.push(format!("{name}: |center − C| = {dev:.1e}, {slope}"));
    }
    check(ok, parts.join("; "))
}

fn c8_stability(l: &Leaves) -> Outcome {
    let mut ok = true;
    let mut parts = vec![];
    for leaf in &l.leaves[..3] {
        let r = leaf.radius;
        let a = leaf.lambda0 * r * r;
        let b = leaf.lambda1 * r.powi(3) / leaf.mass;
        ok &= (a + 2.0).abs() <= 0.05 * 2.0;
        ok &= (b - 6.0).abs() <= 0.15 * 6.0;
        ok &= leaf.lambda1_meanzero > 0.0 && leaf.strictly_stable == Some(true);
        parts.push(format!("R {r}: λ₀R² {a:.3}, λ₁R³/m {b:.3}, mean-zero {:.2e}", leaf.lambda1_meanzero));
    }
    check(ok, parts.join("; "))
}

fn c9_ricci_flux(l: &Leaves) -> Outcome {
    let v: Vec<f64> = l.leaves.iter().map(|x| x.ricci_mass).collect();
    let e = extrapolate(&l.radii, &v).map_err(e2s)?;
    let m = l.leaves[0].mass;
    let rel = (e.value - m).abs() / m;
    check(rel <= 0.02, format!("extrapolated {:.5} vs m = {m:.6} (rel. {rel:.1e})", e.value))
}

fn c10_rt_necessity() -> Outcome {
    let g = build_grid(12).map_err(e2s)?;
    let f = DataFamily::rt_violating(1.0, 0.75, 0.5, Vec3::z(), 10.0).map_err(e2s)?;
    let m = adm_mass(&f, &schedule(), &g).map_err(e2s)?;
    let c = center_of_mass_hamiltonian(&f, &schedule(), &g, m.value, true).map_err(e2s)?;
    let m_ok = (m.value - 1.0).abs() <= 1e-4 && m.error <= 1e-4;
    let base = DataFamily::harmonic(
        harmonic_a().with_shift(Vec3::new(0.1, 0.05, -0.02), spin_dipole()),
        5.0,
    )
    .map_err(e2s)?;
    let t = charge_continuity_experiment(
        &base,
        Perturbation::Even { rate: 1.1 },
        &ContinuitySettings::default(),
        &schedule(),
        &g,
    )
    .map_err(e2s)?;
    let slopes = [t.mass_slope, t.momentum_slope, t.center_slope, t.angular_slope];
    let linear = slopes.iter().all(|s| s.is_some_and(|s| (s - 1.0).abs() <= 0.1));
    check(
        c.non_cauchy && m_ok && t.rt_bound_satisfied && t.c_converges && linear,
        format!(
            "RT-violating: C non-Cauchy = {}, m = {:.6}; even perturbation slopes m/P/C/J = {:?}",
            c.non_cauchy,
            m.value,
            slopes.map(|s| s.map(|s| (s * 1000.0).round() / 1000.0))
        ),
    )
}

fn c11_surface_independence() -> Outcome {
    let g = build_grid(16).map_err(e2s)?;
    let c0 = Vec3::new(3.0, -2.0, 5.0);
    let f = schwarzschild(c0);
    let m = adm_mass(&f, &schedule(), &g).map_err(e2s)?;
    let ci = intrinsic_center_on_spheres(&f, &schedule(), &g, m.value).map_err(e2s)?;
    let ge = Arc::new(build_grid(32).map_err(e2s)?);
    let mut worst = 0.0f64;
    for axes in [[1.0, 1.1, 1.2], [1.2, 1.0, 1.0], [1.0, 1.0, 1.15]] {
        let mut surfaces = vec![];
        let mut nominal = vec![];
        for r in schedule().radii() {
            let a = axes.map(|x| x * r);
            nominal.push((a[0] * a[1] * a[2]).cbrt());
            surfaces.push(ellipsoid_surface(Vec3::zeros(), a, Arc::clone(&ge)).map_err(e2s)?);
        }
        let ce = intrinsic_center(&f, &surfaces, &nominal, m.value).map_err(e2s)?;
        let d = (ce.exact.vector() - ci.exact.vector()).norm();
        let t = (ci.exact.error_norm() + ce.exact.error_norm()).max(1e-3);
        worst = worst.max(d / t);
    }
    check(worst < 1.0, format!("max |C_I(ellipsoids) − C_I(spheres)| / combined error = {worst:.2e}"))
}

fn c12_property_suites() -> Outcome {
    let t = Instant::now();
    let mut worst_quad = 0.0f64;
    for lmax in [8usize, 16, 32] {
        let g = build_grid(lmax).map_err(e2s)?;
        let n = 2 * lmax as u32;
        for a in (0..=n).step_by(if lmax == 32 { 3 } else { 1 }) {
            for b in 0..=(n - a) {
                let c = n - a - b;
                for c in [c, c.saturating_sub(1)] {
                    let v = g.sample(|w| w[0].powi(a as i32) * w[1].powi(b as i32) * w[2].powi(c as i32));
                    let got = g.integrate(&v).map_err(e2s)?;
                    worst_quad = worst_quad.max((got - common::monomial_integral(a, b, c)).abs());
                }
            }
        }
    }
    let mut worst_rt = 0.0f64;
    let mut worst_helm = 0.0f64;
    for (k, lmax) in [4usize, 9, 16, 25, 32].into_iter().enumerate() {
        let g = build_grid(lmax).map_err(e2s)?;
        let c = common::random_coefficients(lmax, 17 + k as u64);
        let back = g.sht_forward(&g.sht_inverse(&c).map_err(e2s)?).map_err(e2s)?;
        worst_rt = worst_rt.max(c.add_scaled(&back, -1.0).norm());
        let r = 10f64.powi(k as i32);
        let psi = helmholtz_solve(&c, r, L1Policy::ProjectOut).map_err(e2s)?;
        let mut expect = c.clone();
        expect.set_l1_vector([0.0; 3]);
        let d = helmholtz_apply(&psi, r).add_scaled(&expect, -1.0).norm() / expect.norm();
        worst_helm = worst_helm.max(d + psi.block_norm(1));
    }
    let mut worst_fd = (0.0f64, String::new());
    let fams = common::catalog();
    for k in 0..24 {
        let s = k as f64;
        let x = common::point(10.0 * 10f64.powf(s / 23.0), 0.1 + 2.9 * (s * 0.618).fract(), 6.2 * (s * 0.414).fract());
        for f in &fams {
            let e = common::jet_error(f, &x);
            if e.0 > worst_fd.0 {
                worst_fd = e;
            }
        }
    }
    let el = t.elapsed();
    check(
        worst_quad <= 1e-12 && worst_rt <= 1e-10 && worst_fd.0 <= 1e-6 && worst_helm <= 1e-12 && el < Duration::from_secs(60),
        format!(
            "quadrature {worst_quad:.1e}, round trip {worst_rt:.1e}, derivatives {:.1e} ({}), Helmholtz {worst_helm:.1e}, {:.2} s",
            worst_fd.0,
            worst_fd.1,
            el.as_secs_f64()
        ),
    )
}

fn main() {
    let mut failed = 0;
    let mut report = |n: usize, name: &str, f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let out = f();
        let el = t.elapsed().as_secs_f64();
        match out {
            Ok(d) => println!("criterion {n:>2} PASS  {name} [{el:.2} s]: {d}"),
            Err(d) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name} [{el:.2} s]: {d}");
            }
        }
    };
    report(1, "Schwarzschild mass", &c1_schwarzschild_mass);
    report(2, "intrinsic mass equals ADM mass", &c2_intrinsic_mass);
    report(3, "center covariance", &c3_center_covariance);
    report(4, "center identity remainder", &c4_center_identity);
    report(5, "mean-curvature expansion", &c5_mean_curvature_expansion);
    let leaves = perturbed_leaves();
    let on_leaves = |f: fn(&Leaves) -> Outcome| match &leaves {
        Ok(l) => f(l),
        Err(e) => Err(e.clone()),
    };
    report(6, "CMC construction", &|| on_leaves(c6_cmc_construction));
    report(7, "geometric center equals Hamiltonian center", &c7_geometric_center);
    report(8, "stability spectrum", &|| on_leaves(c8_stability));
    report(9, "Ricci-flux mass", &|| on_leaves(c9_ricci_flux));
    report(10, "RT necessity", &c10_rt_necessity);
    report(11, "surface independence of C_I", &c11_surface_independence);
    report(12, "property suites", &c12_property_suites);
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all 12 criteria passed");
}
