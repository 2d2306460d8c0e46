//! Flux-integral charges at infinity and the experiments built on them.
//!
//! Every charge is evaluated on the coordinate spheres `|x| = r` of a
//! [`RadiusSchedule`] and extrapolated to `r → ∞` with [`crate::fit::extrapolate`].

mod experiments;
mod flux;
mod intrinsic;
mod sobolev;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{extrapolate, extrapolate_vec, Extrapolation};
use crate::initial_data::{DataFamily, RtCheck};
use crate::sphere::SphereGrid;
use crate::Vec3;

pub use experiments::{
    charge_continuity_experiment, coordinate_transform_check, ContinuityRow, ContinuitySettings,
    ContinuityTable, ScalarComparison, TransformReport, VectorComparison,
};
pub use flux::{
    adm_mass, angular_momentum, center_identity_lhs, center_identity_residual,
    center_of_mass_hamiltonian, linear_momentum, CenterOfMass,
};
pub use intrinsic::{
    check_admissibility, ellipsoid_surface, intrinsic_center, intrinsic_center_on_spheres,
    intrinsic_mass, Admissibility, IntrinsicCenter, IntrinsicMass,
};
pub use sobolev::{
    metric_difference_sampler, metric_perturbation_sampler, odd_part, odd_part_sampler,
    perturbation_sampler,
    weighted_sobolev_norm, Annulus, SobolevNorm, SobolevSampler,
};

/// Below this magnitude the mass is treated as zero when normalizing `C` and `J`.
pub const MASS_ZERO_TOL: f64 = 1e-9;

/// Increasing radii at which flux integrals are evaluated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiusSchedule {
    radii: Vec<f64>,
}

impl RadiusSchedule {
    pub fn new(radii: Vec<f64>) -> Result<Self> {
        if radii.is_empty() {
            return Err(Error::Input("empty radius schedule".into()));
        }
        if radii.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return Err(Error::Input("radii must be positive and finite".into()));
        }
        if radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Input("radii must be strictly increasing".into()));
        }
        Ok(RadiusSchedule { radii })
    }

    /// `first · ratio^k`, `k = 0..n`.
    pub fn geometric(first: f64, ratio: f64, n: usize) -> Result<Self> {
        if !(ratio > 1.0) {
            return Err(Error::Input(format!("ratio {ratio} must exceed 1")));
        }
        Self::new((0..n).map(|k| first * ratio.powi(k as i32)).collect())
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    /// Fails with a domain error if some radius does not exceed the chart radius.
    pub fn check_chart(&self, family: &DataFamily) -> Result<()> {
        match self.radii.iter().find(|r| **r <= family.r0()) {
            Some(r) => Err(Error::Domain(format!(
                "radius {r} does not exceed the chart radius {}",
                family.r0()
            ))),
            None => Ok(()),
        }
    }

    fn check_extrapolable(&self) -> Result<()> {
        if self.radii.len() < 4 {
            return Err(Error::Input(format!(
                "extrapolation needs at least 4 radii, got {}",
                self.radii.len()
            )));
        }
        Ok(())
    }
}

/// Euclidean (conformal) Killing fields used as test fields in flux integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KillingField {
    /// `e_i`.
    Translation(usize),
    /// `Y_(p) = e_p × x`.
    Rotation(usize),
    /// `−2 x^i ∂_i`.
    Dilation,
    /// `Y_(l) = Σ_i (|x|² δ^{li} − 2 x^l x^i) ∂_i`.
    BoostConformal(usize),
}

impl KillingField {
    pub fn at(&self, x: &Vec3) -> Vec3 {
        match *self {
            KillingField::Translation(i) => {
                let mut v = Vec3::zeros();
                v[i] = 1.0;
                v
            }
            KillingField::Rotation(p) => {
                let mut e = Vec3::zeros();
                e[p] = 1.0;
                e.cross(x)
            }
            KillingField::Dilation => -2.0 * x,
            KillingField::BoostConformal(l) => {
                let mut v = -2.0 * x[l] * x;
                v[l] += x.norm_squared();
                v
            }
        }
    }
}

/// A scalar charge at each radius and its extrapolated limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarCharge {
    pub radii: Vec<f64>,
    pub per_radius: Vec<f64>,
    pub value: f64,
    pub error: f64,
    /// Fitted decay exponent of the finite-radius correction.
    pub exponent: f64,
    pub lmax: usize,
}

impl ScalarCharge {
    fn build(radii: &[f64], per_radius: Vec<f64>, lmax: usize) -> Result<Self> {
        let e: Extrapolation = extrapolate(radii, &per_radius)?;
        Ok(ScalarCharge {
            radii: radii.to_vec(),
            per_radius,
            value: e.value,
            error: e.error,
            exponent: e.exponent,
            lmax,
        })
    }
}

/// A vector charge at each radius and its component-wise extrapolated limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VectorCharge {
    pub radii: Vec<f64>,
    pub per_radius: Vec<[f64; 3]>,
    pub value: [f64; 3],
    pub error: [f64; 3],
    pub lmax: usize,
}

impl VectorCharge {
    fn build(radii: &[f64], per_radius: Vec<[f64; 3]>, lmax: usize) -> Result<Self> {
        let e = extrapolate_vec(radii, &per_radius)?;
        Ok(VectorCharge {
            radii: radii.to_vec(),
            per_radius,
            value: [e[0].value, e[1].value, e[2].value],
            error: [e[0].error, e[1].error, e[2].error],
            lmax,
        })
    }

    pub fn vector(&self) -> Vec3 {
        Vec3::from(self.value)
    }

    /// Euclidean norm of the component errors.
    pub fn error_norm(&self) -> f64 {
        Vec3::from(self.error).norm()
    }

    /// Whether successive differences `|v(r_{k+1}) − v(r_k)|` stop decreasing
    /// above rounding level.
    pub fn is_non_cauchy(&self) -> bool {
        let d: Vec<f64> = self
            .per_radius
            .windows(2)
            .map(|w| (Vec3::from(w[1]) - Vec3::from(w[0])).norm())
            .collect();
        if d.len() < 2 {
            return false;
        }
        let scale = self
            .per_radius
            .iter()
            .fold(1.0f64, |m, v| m.max(Vec3::from(*v).norm()));
        let floor = 1e-10 * scale;
        let (a, b) = (d[d.len() - 2], d[d.len() - 1]);
        b > floor && b >= a
    }
}

/// Options shared by the charge computations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChargeOptions {
    /// Compute `C` and `J` even if the parity check rejects the RT condition.
    pub force_rt: bool,
}

/// Every charge that applies to a family, with refusals recorded by name.
#[derive(Debug, Clone, Serialize)]
pub struct ChargeReport {
    pub family: String,
    pub lmax: usize,
    pub mass: ScalarCharge,
    pub momentum: Option<VectorCharge>,
    pub center: Option<CenterOfMass>,
    pub angular_momentum: Option<VectorCharge>,
    pub intrinsic_mass: Option<IntrinsicMass>,
    pub intrinsic_center: Option<IntrinsicCenter>,
    pub rt: Option<RtCheck>,
    /// `(charge, reason)` for every charge that was not computed.
    pub refusals: Vec<(String, String)>,
}

fn refuse<T>(refusals: &mut Vec<(String, String)>, name: &str, r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e) if e.is_refusal() => {
            refusals.push((name.to_string(), e.to_string()));
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

/// Computes `m`, `P`, `C`, `J`, `m_I` and `C_I` (the latter on coordinate spheres).
pub fn compute_charges(
    family: &DataFamily,
    schedule: &RadiusSchedule,
    grid: &SphereGrid,
    opts: ChargeOptions,
) -> Result<ChargeReport> {
    let mass = adm_mass(family, schedule, grid)?;
    let mut refusals = Vec::new();
    let momentum = refuse(&mut refusals, "P", linear_momentum(family, schedule, grid))?;
    let center = refuse(
        &mut refusals,
        "C",
        center_of_mass_hamiltonian(family, schedule, grid, mass.value, opts.force_rt),
    )?;
    let rt = center.as_ref().map(|c| c.rt.clone());
    let angular = refuse(
        &mut refusals,
        "J",
        angular_momentum(family, schedule, grid, mass.value, opts.force_rt),
    )?;
    let m_i = refuse(&mut refusals, "m_I", intrinsic_mass(family, schedule, grid))?;
    let c_i = refuse(
        &mut refusals,
        "C_I",
        intrinsic_center_on_spheres(family, schedule, grid, mass.value),
    )?;
    Ok(ChargeReport {
        family: family.name(),
        lmax: grid.lmax(),
        mass,
        momentum,
        center,
        angular_momentum: angular,
        intrinsic_mass: m_i,
        intrinsic_center: c_i,
        rt,
        refusals,
    })
}
