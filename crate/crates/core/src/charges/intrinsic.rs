use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::initial_data::DataFamily;
use crate::sphere::{pairwise_sum, SphereGrid};
use crate::surface::{compute_geometry, RadialGraphSurface, SurfaceGeometry};
use crate::Vec3;

use super::flux::require_mass;
use super::{KillingField, RadiusSchedule, ScalarCharge, VectorCharge};

/// Volume asymmetry below this multiple of `R³` counts as zero.
const ASYMMETRY_ZERO: f64 = 1e-12;

/// `m_I` with the exact normal and area element, and with their flat replacements.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntrinsicMass {
    pub exact: ScalarCharge,
    /// `ν_g → x/r`, `dσ_g → dσ₀`.
    pub flat: ScalarCharge,
}

/// `C_I` over a surface sequence, with the flat-replacement diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntrinsicCenter {
    pub exact: VectorCharge,
    pub flat: VectorCharge,
    pub mass: f64,
    pub admissibility: Admissibility,
}

/// The three admissibility conditions evaluated on a surface sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Admissibility {
    pub nominal_radii: Vec<f64>,
    /// `inf { |x| : x ∈ S_k }`.
    pub inradius: Vec<f64>,
    /// `area_g(S_k) / r_k²`.
    pub area_ratio: Vec<f64>,
    /// Euclidean volume of the symmetric difference of the regions bounded by `S_k` and `−S_k`.
    pub asymmetry: Vec<f64>,
    /// Largest two-point log slope of the asymmetry against the nominal radius.
    pub asymmetry_slope: Option<f64>,
}

/// `Σ (R_ij − ½ R g_ij) Y^i ν^j` for every field, integrated with the exact and flat measures.
fn einstein_flux<const N: usize>(geom: &SurfaceGeometry, fields: [KillingField; N]) -> ([f64; N], [f64; N]) {
    let mut exact = [0.0; N];
    let mut flat = [0.0; N];
    for (a, field) in fields.iter().enumerate() {
        let (ve, vf): (Vec<f64>, Vec<f64>) = geom
            .nodes
            .iter()
            .map(|n| {
                let y = field.at(&n.position);
                let nl = n.tangents[0].cross(&n.tangents[1]);
                let w = nl / nl.norm();
                let (mut se, mut sf) = (0.0, 0.0);
                for i in 0..3 {
                    for j in 0..3 {
                        let g = n.ricci[i][j] - 0.5 * n.scalar_curvature * n.metric[i][j];
                        se += g * y[i] * n.normal[j];
                        sf += g * y[i] * w[j];
                    }
                }
                (se * n.area_weight, sf * n.flat_area_weight)
            })
            .unzip();
        exact[a] = pairwise_sum(&ve);
        flat[a] = pairwise_sum(&vf);
    }
    (exact, flat)
}

fn sphere_geometries(
    family: &DataFamily,
    schedule: &RadiusSchedule,
    grid: &SphereGrid,
) -> Result<Vec<SurfaceGeometry>> {
    schedule.check_chart(family)?;
    schedule.check_extrapolable()?;
    let grid = Arc::new(grid.clone());
    schedule
        .radii()
        .par_iter()
        .map(|&r| {
            let s = RadialGraphSurface::sphere(Vec3::zeros(), r, Arc::clone(&grid))?;
            compute_geometry(&s, family)
        })
        .collect()
}

/// `m_I(r) = (1/16π) ∫ Σ (R_ij − ½ R g_ij)(−2x^i) ν^j dσ_g` on coordinate spheres.
pub fn intrinsic_mass(family: &DataFamily, schedule: &RadiusSchedule, grid: &SphereGrid) -> Result<IntrinsicMass> {
    let geoms = sphere_geometries(family, schedule, grid)?;
    let (ex, fl): (Vec<f64>, Vec<f64>) = geoms
        .iter()
        .map(|g| {
            let ([e], [f]) = einstein_flux(g, [KillingField::Dilation]);
            (e / (16.0 * PI), f / (16.0 * PI))
        })
        .unzip();
    Ok(IntrinsicMass {
        exact: ScalarCharge::build(schedule.radii(), ex, grid.lmax())?,
        flat: ScalarCharge::build(schedule.radii(), fl, grid.lmax())?,
    })
}

/// `∫ |ρ₀(ω)³ − ρ₀(−ω)³| / 3 dω`, the volume of the symmetric difference of the
/// regions bounded by `S` and `−S`.
fn volume_asymmetry(surface: &RadialGraphSurface) -> Result<f64> {
    let grid = surface.grid();
    if surface.center() == Vec3::zeros() && surface.psi().as_slice().iter().all(|c| *c == 0.0) {
        return Ok(0.0);
    }
    let vals: Result<Vec<f64>> = grid
        .nodes()
        .par_iter()
        .map(|w| {
            let a = surface.radial_function_about(&Vec3::zeros(), w)?;
            let b = surface.radial_function_about(&Vec3::zeros(), &(-w))?;
            Ok((a.powi(3) - b.powi(3)).abs() / 3.0)
        })
        .collect();
    grid.integrate(&vals?)
}

/// Evaluates the admissibility conditions on `surfaces` with nominal radii `nominal`.
pub fn check_admissibility(
    surfaces: &[RadialGraphSurface],
    geoms: &[SurfaceGeometry],
    nominal: &[f64],
) -> Result<Admissibility> {
    if surfaces.len() != nominal.len() || geoms.len() != nominal.len() {
        return Err(Error::Input("surfaces, geometries and radii differ in length".into()));
    }
    if surfaces.len() < 2 {
        return Err(Error::Input("admissibility needs at least two surfaces".into()));
    }
    if nominal.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Input("nominal radii must increase".into()));
    }
    let inradius: Vec<f64> = geoms
        .iter()
        .map(|g| g.nodes.iter().fold(f64::INFINITY, |m, n| m.min(n.position.norm())))
        .collect();
    let area_ratio: Vec<f64> = geoms
        .iter()
        .zip(&inradius)
        .map(|(g, r)| g.area() / (r * r))
        .collect();
    let asymmetry: Result<Vec<f64>> = surfaces.iter().map(volume_asymmetry).collect();
    let asymmetry = asymmetry?;

    let adm = Admissibility {
        nominal_radii: nominal.to_vec(),
        asymmetry_slope: asymmetry_slope(&asymmetry, nominal),
        inradius,
        area_ratio,
        asymmetry,
    };
    if let Some(k) = adm.inradius.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::Admissibility {
            condition: 1,
            detail: format!(
                "inradius does not increase: {} then {}",
                adm.inradius[k],
                adm.inradius[k + 1]
            ),
        });
    }
    let a0 = adm.area_ratio[0];
    if let Some(a) = adm.area_ratio.iter().find(|a| **a > 2.0 * a0 || **a < 0.5 * a0) {
        return Err(Error::Admissibility {
            condition: 2,
            detail: format!("area / inradius² drifts from {a0} to {a}"),
        });
    }
    if let Some(s) = adm.asymmetry_slope {
        if s >= 3.0 {
            return Err(Error::Admissibility {
                condition: 3,
                detail: format!("asymmetric volume grows with exponent {s:.3}"),
            });
        }
    }
    Ok(adm)
}

fn asymmetry_slope(v: &[f64], r: &[f64]) -> Option<f64> {
    let negligible = v.iter().zip(r).all(|(v, r)| *v <= ASYMMETRY_ZERO * r.powi(3));
    if negligible {
        return None;
    }
    v.windows(2)
        .zip(r.windows(2))
        .map(|(v, r)| {
            let (a, b) = (v[0].max(ASYMMETRY_ZERO * r[0].powi(3)), v[1].max(ASYMMETRY_ZERO * r[1].powi(3)));
            (b / a).ln() / (r[1] / r[0]).ln()
        })
        .reduce(f64::max)
}

/// `C_I^l = (1/16πm) lim ∫ Σ (R_ij − ½ R g_ij) Y_(l)^i ν^j dσ_g` over `surfaces`,
/// extrapolated in the nominal radius.
pub fn intrinsic_center(
    family: &DataFamily,
    surfaces: &[RadialGraphSurface],
    nominal: &[f64],
    mass: f64,
) -> Result<IntrinsicCenter> {
    require_mass(mass, "the intrinsic center")?;
    let geoms: Result<Vec<SurfaceGeometry>> = surfaces
        .par_iter()
        .map(|s| compute_geometry(s, family))
        .collect();
    let geoms = geoms?;
    let admissibility = check_admissibility(surfaces, &geoms, nominal)?;
    let fields = [
        KillingField::BoostConformal(0),
        KillingField::BoostConformal(1),
        KillingField::BoostConformal(2),
    ];
    let norm = 16.0 * PI * mass;
    let (ex, fl): (Vec<[f64; 3]>, Vec<[f64; 3]>) = geoms
        .iter()
        .map(|g| {
            let (e, f) = einstein_flux(g, fields);
            (e.map(|v| v / norm), f.map(|v| v / norm))
        })
        .unzip();
    let lmax = surfaces.first().map_or(0, |s| s.grid().lmax());
    Ok(IntrinsicCenter {
        exact: VectorCharge::build(nominal, ex, lmax)?,
        flat: VectorCharge::build(nominal, fl, lmax)?,
        mass,
        admissibility,
    })
}

/// [`intrinsic_center`] on the coordinate spheres of `schedule`.
pub fn intrinsic_center_on_spheres(
    family: &DataFamily,
    schedule: &RadiusSchedule,
    grid: &SphereGrid,
    mass: f64,
) -> Result<IntrinsicCenter> {
    require_mass(mass, "the intrinsic center")?;
    schedule.check_chart(family)?;
    schedule.check_extrapolable()?;
    let grid = Arc::new(grid.clone());
    let surfaces: Result<Vec<RadialGraphSurface>> = schedule
        .radii()
        .iter()
        .map(|&r| RadialGraphSurface::sphere(Vec3::zeros(), r, Arc::clone(&grid)))
        .collect();
    intrinsic_center(family, &surfaces?, schedule.radii(), mass)
}

/// The coordinate ellipsoid `Σ (x_i − c_i)² / a_i² = 1` as a radial graph about `center`,
/// with nominal radius `(a₁a₂a₃)^{1/3}`.
pub fn ellipsoid_surface(center: Vec3, axes: [f64; 3], grid: Arc<SphereGrid>) -> Result<RadialGraphSurface> {
    if axes.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
        return Err(Error::Input(format!("ellipsoid axes {axes:?} must be positive")));
    }
    let nominal = (axes[0] * axes[1] * axes[2]).cbrt();
    RadialGraphSurface::from_radial_function(center, nominal, grid, |w| {
        let s: f64 = (0..3).map(|i| (w[i] / axes[i]).powi(2)).sum();
        1.0 / s.sqrt()
    })
}
