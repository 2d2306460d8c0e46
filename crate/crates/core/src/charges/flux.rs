use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::initial_data::{rt_check, ChartPoint, DataFamily, RtCheck};
use crate::sphere::SphereGrid;
use crate::surface::{compute_geometry, RadialGraphSurface};
use crate::Vec3;

use super::{KillingField, RadiusSchedule, ScalarCharge, VectorCharge, MASS_ZERO_TOL};

/// `∫_{|x| = r} f dσ₀` for an `N`-component integrand `f(x, ω)`.
pub(crate) fn sphere_flux<const N: usize, F>(grid: &SphereGrid, r: f64, f: F) -> Result<[f64; N]>
where
    F: Fn(&ChartPoint, &Vec3) -> Result<[f64; N]> + Sync,
{
    let vals: Result<Vec<[f64; N]>> = grid
        .nodes()
        .par_iter()
        .map(|w| f(&ChartPoint(w * r), w))
        .collect();
    let vals = vals?;
    let mut out = [0.0; N];
    for (c, slot) in out.iter_mut().enumerate() {
        let comp: Vec<f64> = vals.iter().map(|v| v[c]).collect();
        *slot = grid.integrate(&comp)? * r * r;
    }
    Ok(out)
}

fn per_radius<const N: usize, F>(schedule: &RadiusSchedule, f: F) -> Result<Vec<[f64; N]>>
where
    F: Fn(f64) -> Result<[f64; N]> + Sync,
{
    schedule.radii().par_iter().map(|&r| f(r)).collect()
}

/// `Σ_ij (g_ij,i − g_ii,j) ω^j`.
fn mass_density(family: &DataFamily, x: &ChartPoint, w: &Vec3) -> Result<f64> {
    let j = family.metric_at(x)?;
    let mut s = 0.0;
    for i in 0..3 {
        for k in 0..3 {
            s += (j.dg[i][k][i] - j.dg[i][i][k]) * w[k];
        }
    }
    Ok(s)
}

/// ADM mass `m(r) = (1/16π) ∫ Σ (g_ij,i − g_ii,j) x^j/r dσ₀`.
pub fn adm_mass(family: &DataFamily, schedule: &RadiusSchedule, grid: &SphereGrid) -> Result<ScalarCharge> {
    schedule.check_chart(family)?;
    schedule.check_extrapolable()?;
    let vals = per_radius(schedule, |r| {
        let [v] = sphere_flux(grid, r, |x, w| Ok([mass_density(family, x, w)?]))?;
        Ok([v / (16.0 * PI)])
    })?;
    ScalarCharge::build(schedule.radii(), vals.into_iter().map(|[v]| v).collect(), grid.lmax())
}

/// Linear momentum `P^j(r) = (1/8π) ∫ Σ_i π_ij x^i/r dσ₀`.
pub fn linear_momentum(family: &DataFamily, schedule: &RadiusSchedule, grid: &SphereGrid) -> Result<VectorCharge> {
    require_momentum(family)?;
    schedule.check_chart(family)?;
    schedule.check_extrapolable()?;
    let vals = per_radius(schedule, |r| {
        let v = sphere_flux(grid, r, |x, w| {
            let p = family.momentum_at(x)?;
            let mut out = [0.0; 3];
            for (j, o) in out.iter_mut().enumerate() {
                for i in 0..3 {
                    *o += p.pi[i][j] * w[i];
                }
            }
            Ok(out)
        })?;
        Ok(v.map(|c| c / (8.0 * PI)))
    })?;
    VectorCharge::build(schedule.radii(), vals, grid.lmax())
}

fn require_momentum(family: &DataFamily) -> Result<()> {
    if family.has_momentum() {
        Ok(())
    } else {
        Err(Error::Capability(format!(
            "family '{}' does not provide a momentum tensor",
            family.name()
        )))
    }
}

pub(crate) fn require_mass(mass: f64, what: &str) -> Result<()> {
    if !mass.is_finite() || mass.abs() <= MASS_ZERO_TOL {
        return Err(Error::Normalization(format!(
            "{what} is normalized by the mass, which vanishes (m = {mass:e})"
        )));
    }
    Ok(())
}

/// Runs the parity check unless forced; a forced run still records the check if it can be made.
fn parity_gate(family: &DataFamily, grid: &SphereGrid, schedule: &RadiusSchedule, force: bool) -> Result<RtCheck> {
    match rt_check(family, grid, schedule.radii()) {
        Ok(rt) if rt.accepted || force => Ok(rt),
        Ok(rt) => Err(Error::RtViolation(rt.detail)),
        Err(e) if force => Ok(RtCheck {
            radii: schedule.radii().to_vec(),
            metric_odd: vec![],
            momentum_even: vec![],
            metric_odd_fit: None,
            momentum_even_fit: None,
            required_metric_exponent: -(1.0 + family.q()),
            required_momentum_exponent: -(2.0 + family.q()),
            accepted: false,
            detail: format!("parity check unavailable: {e}"),
        }),
        Err(e) => Err(e),
    }
}

/// Hamiltonian center of mass with its parity diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CenterOfMass {
    pub charge: VectorCharge,
    pub mass: f64,
    pub rt: RtCheck,
    /// Computed although the parity check rejected the RT condition.
    pub forced: bool,
    /// The per-radius values fail to settle (see [`VectorCharge::is_non_cauchy`]).
    pub non_cauchy: bool,
}

/// Numerator of the center of mass at radius `r`:
/// `∫ x^l Σ(h_ij,i − h_ii,j) x^j/r dσ₀ − ∫ Σ_i (h_il x^i/r − h_ii x^l/r) dσ₀`.
/// Writing the second term with `h = g − δ` removes a term that integrates to zero.
fn center_numerator(family: &DataFamily, grid: &SphereGrid, r: f64) -> Result<[f64; 3]> {
    sphere_flux(grid, r, |x, w| {
        let j = family.metric_at(x)?;
        let mut dens = 0.0;
        for i in 0..3 {
            for k in 0..3 {
                dens += (j.dg[i][k][i] - j.dg[i][i][k]) * w[k];
            }
        }
        let tr = j.g[0][0] + j.g[1][1] + j.g[2][2] - 3.0;
        let mut out = [0.0; 3];
        for (l, o) in out.iter_mut().enumerate() {
            let mut second = -tr * w[l];
            for i in 0..3 {
                let h = j.g[i][l] - if i == l { 1.0 } else { 0.0 };
                second += h * w[i];
            }
            *o = x.0[l] * dens - second;
        }
        Ok(out)
    })
}

/// `C^l(r) = (1/16πm) [...]` with `m` the extrapolated mass.
pub fn center_of_mass_hamiltonian(
    family: &DataFamily,
    schedule: &RadiusSchedule,
    grid: &SphereGrid,
    mass: f64,
    force_rt: bool,
) -> Result<CenterOfMass> {
    require_mass(mass, "the center of mass")?;
    schedule.check_chart(family)?;
    schedule.check_extrapolable()?;
    let rt = parity_gate(family, grid, schedule, force_rt)?;
    let vals = per_radius(schedule, |r| {
        Ok(center_numerator(family, grid, r)?.map(|v| v / (16.0 * PI * mass)))
    })?;
    let charge = VectorCharge::build(schedule.radii(), vals, grid.lmax())?;
    let non_cauchy = charge.is_non_cauchy();
    Ok(CenterOfMass {
        forced: !rt.accepted,
        charge,
        mass,
        rt,
        non_cauchy,
    })
}

/// `J^p(r) = (1/8πm) ∫ Σ π_ij Y_(p)^i x^j/r dσ₀`.
pub fn angular_momentum(
    family: &DataFamily,
    schedule: &RadiusSchedule,
    grid: &SphereGrid,
    mass: f64,
    force_rt: bool,
) -> Result<VectorCharge> {
    require_momentum(family)?;
    require_mass(mass, "the angular momentum")?;
    schedule.check_chart(family)?;
    schedule.check_extrapolable()?;
    parity_gate(family, grid, schedule, force_rt)?;
    let vals = per_radius(schedule, |r| {
        let v = sphere_flux(grid, r, |x, w| {
            let p = family.momentum_at(x)?;
            let mut out = [0.0; 3];
            for (a, o) in out.iter_mut().enumerate() {
                let y = KillingField::Rotation(a).at(&x.0);
                for i in 0..3 {
                    for j in 0..3 {
                        *o += p.pi[i][j] * y[i] * w[j];
                    }
                }
            }
            Ok(out)
        })?;
        Ok(v.map(|c| c / (8.0 * PI * mass)))
    })?;
    VectorCharge::build(schedule.radii(), vals, grid.lmax())
}

/// Residual of the center identity on `S_R(p)`:
/// `∫ (x^l − p^l)(H − 2/R) dσ₀ − 8πm (p^l − C^l)`, with `H` the exact mean curvature.
pub fn center_identity_residual(
    family: &DataFamily,
    p: &Vec3,
    r: f64,
    mass: f64,
    center: &Vec3,
    grid: Arc<SphereGrid>,
) -> Result<[f64; 3]> {
    let lhs = center_identity_lhs(family, p, r, grid)?;
    let rhs = 8.0 * PI * mass * (p - center);
    Ok([lhs[0] - rhs[0], lhs[1] - rhs[1], lhs[2] - rhs[2]])
}

/// `∫_{S_R(p)} (x − p)(H − 2/R) dσ₀`.
pub fn center_identity_lhs(family: &DataFamily, p: &Vec3, r: f64, grid: Arc<SphereGrid>) -> Result<[f64; 3]> {
    let s = RadialGraphSurface::sphere(*p, r, grid)?;
    let geo = compute_geometry(&s, family)?;
    let mut out = [0.0; 3];
    for (l, o) in out.iter_mut().enumerate() {
        let v: Vec<f64> = geo
            .nodes
            .iter()
            .map(|n| n.flat_area_weight * (n.position[l] - p[l]) * (n.mean_curvature - 2.0 / r))
            .collect();
        *o = crate::sphere::pairwise_sum(&v);
    }
    Ok(out)
}
