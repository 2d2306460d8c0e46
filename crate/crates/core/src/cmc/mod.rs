//! Approximate spheres, constant mean curvature leaves and foliation sweeps.
//!
//! Leaves are radial graphs `p + (R + ψ(ω)) ω` with `ψ` free of `l ≤ 1`
//! harmonics: the monopole is absorbed into the achieved constant and the
//! dipole into the center `p`.

mod foliation;

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::charges::{adm_mass, RadiusSchedule, MASS_ZERO_TOL};
use crate::error::{Error, Result};
use crate::initial_data::DataFamily;
use crate::sphere::{build_grid, helmholtz_solve, HarmonicCoefficients, L1Policy, SphereGrid};
use crate::surface::{
    area_and_centroid, assemble_stability, compute_geometry, lowest_eigenvalues, ricci_flux,
    RadialGraphSurface, SurfaceGeometry,
};
use crate::Vec3;

pub use foliation::{foliation_sweep, geometric_center_limit, DisjointnessCheck, Foliation, GeometricCenter};

/// Accepted leaves need a mean residual ratio at most this over the final steps.
const MAX_CONTRACTION: f64 = 0.9;

/// Iterations of the center search in [`select_center`].
const MAX_CENTER_ITERS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveSettings {
    pub lmax: usize,
    /// Bound on `max |H − mean H|`; `None` means `1e−9 · 2/R`.
    pub cmc_tol: Option<f64>,
    pub max_picard_iters: usize,
    /// Bound on the length of the last center correction.
    pub center_tol: f64,
    pub damping: f64,
    /// Basis degree of the stability operator; `None` means `lmax / 2`.
    pub stability_lmax: Option<usize>,
    /// ADM mass used by the center update; `None` extrapolates it from spheres outside `R`.
    pub mass: Option<f64>,
}

impl Default for SolveSettings {
    fn default() -> Self {
        SolveSettings {
            lmax: 32,
            cmc_tol: None,
            max_picard_iters: 50,
            center_tol: 1e-8,
            damping: 1.0,
            stability_lmax: None,
            mass: None,
        }
    }
}

impl SolveSettings {
    pub fn validate(&self) -> Result<()> {
        if self.lmax < 4 {
            return Err(Error::Config(format!("lmax {} is below 4", self.lmax)));
        }
        if let Some(t) = self.cmc_tol {
            if !(t > 0.0) {
                return Err(Error::Config(format!("cmc_tol {t} must be positive")));
            }
        }
        if !(self.center_tol > 0.0) {
            return Err(Error::Config(format!("center_tol {} must be positive", self.center_tol)));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Config(format!("damping {} must lie in (0, 1]", self.damping)));
        }
        if self.max_picard_iters == 0 {
            return Err(Error::Config("max_picard_iters must be positive".into()));
        }
        if let Some(lb) = self.stability_lmax {
            if lb == 0 || lb > self.lmax {
                return Err(Error::Config(format!("stability_lmax {lb} must lie in 1..={}", self.lmax)));
            }
        }
        Ok(())
    }

    pub fn cmc_tol_at(&self, r: f64) -> f64 {
        self.cmc_tol.unwrap_or(1e-9 * 2.0 / r)
    }

    pub(crate) fn grid(&self) -> Result<Arc<SphereGrid>> {
        Ok(Arc::new(build_grid(self.lmax)?))
    }

    /// The configured mass, or the ADM mass extrapolated from `|x| = 2^k R'`, `R' = max(R, 2 r0)`.
    pub fn resolve_mass(&self, family: &DataFamily, r: f64) -> Result<f64> {
        if let Some(m) = self.mass {
            return Ok(m);
        }
        let first = r.max(2.0 * family.r0());
        let schedule = RadiusSchedule::geometric(first, 2.0, 5)?;
        let grid = build_grid(self.lmax.min(16))?;
        Ok(adm_mass(family, &schedule, &grid)?.value)
    }
}

fn require_nonzero_mass(m: f64) -> Result<()> {
    if !m.is_finite() || m.abs() <= MASS_ZERO_TOL {
        return Err(Error::Obstruction(format!(
            "the l = 1 kernel cannot be removed by moving the center when m = {m:e}"
        )));
    }
    Ok(())
}

/// `R³/(8πm) ∫ ω f dω` from the harmonic coefficients of `f`.
fn center_shift(f: &HarmonicCoefficients, r: f64, m: f64) -> Vec3 {
    let a = f.l1_vector();
    let s = (4.0 * PI / 3.0).sqrt() * r.powi(3) / (8.0 * PI * m);
    Vec3::new(a[0], a[1], a[2]) * s
}

/// Harmonic coefficients of `H − c` at the grid nodes. Node values at the
/// rounding level of `H` are set to zero.
fn curvature_defect(surface: &RadialGraphSurface, geom: &SurfaceGeometry, c: f64) -> Result<HarmonicCoefficients> {
    let floor = 16.0 * f64::EPSILON * c.abs();
    let v: Vec<f64> = geom
        .nodes
        .iter()
        .map(|n| n.mean_curvature - c)
        .map(|d| if d.abs() <= floor { 0.0 } else { d })
        .collect();
    surface.grid().sht_forward(&v)
}

fn check_radius(family: &DataFamily, p: &Vec3, r: f64) -> Result<()> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Input(format!("radius {r} must be positive")));
    }
    if r - p.norm() <= family.r0() {
        return Err(Error::Domain(format!(
            "S_{r}(p) with |p| = {} reaches inside the chart radius {}",
            p.norm(),
            family.r0()
        )));
    }
    Ok(())
}

/// One linearized correction of `S_R(p)`: with `f = H − 2/R`, solves
/// `(Δ₀ + 2/R²) ψ = f − f̄` (`l = 1` projected out), so that `H(ψ) = 2/R + f̄`
/// up to quadratic terms and the discarded dipole.
pub fn approximate_sphere(
    family: &DataFamily,
    p: &Vec3,
    r: f64,
    settings: &SolveSettings,
) -> Result<RadialGraphSurface> {
    settings.validate()?;
    check_radius(family, p, r)?;
    let grid = settings.grid()?;
    let sphere = RadialGraphSurface::sphere(*p, r, grid)?;
    let geom = compute_geometry(&sphere, family)?;
    let mut f = curvature_defect(&sphere, &geom, 2.0 / r)?;
    f.set(0, 0, 0.0);
    let psi = helmholtz_solve(&f, r, L1Policy::ProjectOut)?;
    sphere.with(*p, psi)
}

/// Moves the center of `S_R(p)` until the dipole part of `H` vanishes:
/// `p ← p − R³/(8πm) ∫ ω (H − 2/R) dω`.
pub fn select_center(family: &DataFamily, r: f64, p_init: &Vec3, settings: &SolveSettings) -> Result<Vec3> {
    settings.validate()?;
    let m = settings.resolve_mass(family, r)?;
    require_nonzero_mass(m)?;
    let grid = settings.grid()?;
    let mut p = *p_init;
    let mut steps = Vec::new();
    for it in 0..MAX_CENTER_ITERS {
        check_radius(family, &p, r)?;
        let sphere = RadialGraphSurface::sphere(p, r, Arc::clone(&grid))?;
        let geom = compute_geometry(&sphere, family)?;
        let f = curvature_defect(&sphere, &geom, 2.0 / r)?;
        let dp = center_shift(&f, r, m);
        p -= settings.damping * dp;
        let step = dp.norm();
        steps.push(step);
        if step <= settings.center_tol {
            return Ok(p);
        }
        if it >= 3 && steps[it] > steps[it - 1] && steps[it - 1] > steps[it - 2] && steps[it - 2] > steps[it - 3] {
            return Err(Error::NonConvergence {
                iterations: it + 1,
                detail: format!("center steps grow at R = {r}"),
                residuals: steps,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: MAX_CENTER_ITERS,
        detail: format!("center search at R = {r} did not reach {:e}", settings.center_tol),
        residuals: steps,
    })
}

/// A constant mean curvature leaf and its diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct FoliationLeaf {
    pub radius: f64,
    pub h_target: f64,
    #[serde(skip)]
    pub surface: RadialGraphSurface,
    /// Harmonic coefficients of `ψ`.
    pub psi: HarmonicCoefficients,
    /// `H` at the grid nodes.
    pub h_achieved: Vec<f64>,
    pub h_constancy: f64,
    pub cmc_tol: f64,
    pub p_star: Vec3,
    /// Euclidean centroid `∫ x dσ₀ / ∫ dσ₀`.
    pub centroid: Vec3,
    pub lambda0: f64,
    /// Second eigenvalue of the stability operator.
    pub lambda1: f64,
    pub lambda1_meanzero: f64,
    /// `None` when `m ≤ 0`, where stability is not asserted.
    pub strictly_stable: Option<bool>,
    pub area_g: f64,
    /// `∫ Ric(ν, ν) dσ_g`.
    pub ricci_flux: f64,
    /// `−R/(8π) ∫ Ric(ν, ν) dσ_g`.
    pub ricci_mass: f64,
    pub mass: f64,
    /// `max |H − mean H|` before each Picard step, then on the final surface.
    pub residuals: Vec<f64>,
    /// Mean ratio of successive residuals over the last (up to) five steps.
    /// 0 when the starting surface already met the tolerance.
    pub contraction: f64,
    pub psi_sup: f64,
}

/// Picard iteration for a CMC radial graph at nominal radius `R`.
///
/// Each step sets `H_target` to the `dσ_g`-mean of `H`, moves the center by
/// the dipole of `H − H_target` and adds the solution of
/// `(Δ₀ + 2/R²) δψ = H − H_target` for `l ≥ 2`.
pub fn solve_cmc(family: &DataFamily, r: f64, settings: &SolveSettings) -> Result<FoliationLeaf> {
    settings.validate()?;
    let m = settings.resolve_mass(family, r)?;
    require_nonzero_mass(m)?;
    let grid = settings.grid()?;
    let p0 = select_center(family, r, &Vec3::zeros(), &SolveSettings { mass: Some(m), ..settings.clone() })?;
    solve_from(family, r, p0, m, grid, settings)
}

pub(crate) fn solve_from(
    family: &DataFamily,
    r: f64,
    p0: Vec3,
    m: f64,
    grid: Arc<SphereGrid>,
    settings: &SolveSettings,
) -> Result<FoliationLeaf> {
    let tol = settings.cmc_tol_at(r);
    let mut surface = RadialGraphSurface::sphere(p0, r, grid)?;
    let mut residuals = Vec::new();
    let mut last_step = f64::INFINITY;
    let mut rising = 0;
    for it in 0..=settings.max_picard_iters {
        check_radius(family, &surface.center(), r)?;
        let geom = compute_geometry(&surface, family)?;
        let res = geom.h_constancy();
        if !res.is_finite() {
            return Err(Error::Numerical(format!("non-finite mean curvature at R = {r}")));
        }
        if let Some(prev) = residuals.last() {
            rising = if res > *prev { rising + 1 } else { 0 };
        }
        residuals.push(res);
        if res <= tol && last_step <= settings.center_tol {
            return finish(surface, geom, m, residuals, settings);
        }
        if rising >= 3 {
            return Err(Error::Divergence {
                detail: format!("residual rose over 3 successive iterations at R = {r}; try a larger radius"),
                residuals,
            });
        }
        if it == settings.max_picard_iters {
            break;
        }
        let f = curvature_defect(&surface, &geom, geom.mean_h())?;
        let dp = center_shift(&f, r, m);
        let mut f2 = f;
        f2.set(0, 0, 0.0);
        let dpsi = helmholtz_solve(&f2, r, L1Policy::ProjectOut)?;
        let a = settings.damping;
        last_step = a * dp.norm();
        surface = surface.with(surface.center() - a * dp, surface.psi().add_scaled(&dpsi, a))?;
    }
    Err(Error::NonConvergence {
        iterations: settings.max_picard_iters,
        detail: format!(
            "H constancy {:e} (tolerance {tol:e}), last center step {last_step:e} at R = {r}",
            residuals.last().copied().unwrap_or(f64::NAN)
        ),
        residuals,
    })
}

fn finish(
    surface: RadialGraphSurface,
    geom: SurfaceGeometry,
    m: f64,
    residuals: Vec<f64>,
    settings: &SolveSettings,
) -> Result<FoliationLeaf> {
    let r = surface.radius();
    let contraction = contraction(&residuals, settings.cmc_tol_at(r));
    if contraction > MAX_CONTRACTION {
        return Err(Error::NonConvergence {
            iterations: residuals.len() - 1,
            detail: format!("mean residual ratio {contraction} over the last steps exceeds {MAX_CONTRACTION} at R = {r}"),
            residuals,
        });
    }
    let lb = settings.stability_lmax.unwrap_or(settings.lmax / 2);
    let op = assemble_stability(&surface, &geom, lb)?;
    let ev = lowest_eigenvalues(&op, 2)?;
    let lambda1_meanzero = op.lambda1_meanzero()?;
    let (area_g, centroid) = area_and_centroid(&geom);
    let flux = ricci_flux(&geom);
    let psi_sup = surface
        .psi_values()?
        .iter()
        .fold(0.0f64, |a, v| a.max(v.abs()));
    Ok(FoliationLeaf {
        radius: r,
        h_target: geom.mean_h(),
        psi: surface.psi().clone(),
        h_achieved: geom.mean_curvature(),
        h_constancy: geom.h_constancy(),
        cmc_tol: settings.cmc_tol_at(r),
        p_star: surface.center(),
        centroid,
        lambda0: ev[0],
        lambda1: ev[1],
        lambda1_meanzero,
        strictly_stable: (m > 0.0).then_some(lambda1_meanzero > 0.0),
        area_g,
        ricci_flux: flux,
        ricci_mass: -flux * r / (8.0 * PI),
        mass: m,
        contraction,
        residuals,
        psi_sup,
        surface,
    })
}

/// Mean of `res[k+1]/res[k]` over the last (up to) five steps taken from a
/// residual above `tol`; 0 when there are none.
fn contraction(res: &[f64], tol: f64) -> f64 {
    let ratios: Vec<f64> = res
        .windows(2)
        .filter(|w| w[0] > tol)
        .map(|w| w[1] / w[0])
        .collect();
    let tail = &ratios[ratios.len().saturating_sub(5)..];
    if tail.is_empty() {
        0.0
    } else {
        tail.iter().sum::<f64>() / tail.len() as f64
    }
}
