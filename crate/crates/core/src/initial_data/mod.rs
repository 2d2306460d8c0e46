//! Analytic asymptotically flat initial data sets.
//!
//! Every family evaluates the metric `g`, the momentum tensor `π` and their
//! coordinate derivatives exactly at a chart point. Derivatives come from
//! [`Jet`](crate::jet::Jet) arithmetic on closed-form expressions.

mod curvature;
mod families;
mod parity;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{Mat3, Vec3};

pub use curvature::{constraint_residual, ricci_at, ricci_conformal, Christoffel, ConstraintDensities, Ricci};
pub use parity::{
    decay_exponent_fit, metric_odd_sup, momentum_even_sup, parity_decompose, rt_check, DecayFit,
    RtCheck,
};

/// A point of the asymptotic chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartPoint(pub Vec3);

impl ChartPoint {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        ChartPoint(Vec3::new(x, y, z))
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.0.x, self.0.y, self.0.z]
    }
}

impl From<Vec3> for ChartPoint {
    fn from(v: Vec3) -> Self {
        ChartPoint(v)
    }
}

/// Metric components with first and second coordinate derivatives.
///
/// `dg[i][j][k] = ∂_k g_ij`, `ddg[i][j][k][l] = ∂_k ∂_l g_ij`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricJet {
    pub g: [[f64; 3]; 3],
    pub dg: [[[f64; 3]; 3]; 3],
    pub ddg: [[[[f64; 3]; 3]; 3]; 3],
}

impl MetricJet {
    pub fn flat() -> Self {
        let mut g = [[0.0; 3]; 3];
        for (i, row) in g.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        MetricJet {
            g,
            dg: [[[0.0; 3]; 3]; 3],
            ddg: [[[[0.0; 3]; 3]; 3]; 3],
        }
    }

    pub fn g_matrix(&self) -> Mat3 {
        Mat3::from_fn(|i, j| self.g[i][j])
    }

    pub fn inverse(&self) -> Result<[[f64; 3]; 3]> {
        let inv = self
            .g_matrix()
            .try_inverse()
            .ok_or_else(|| Error::DegenerateMetric("metric is not invertible".into()))?;
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in i..3 {
                let v = 0.5 * (inv[(i, j)] + inv[(j, i)]);
                out[i][j] = v;
                out[j][i] = v;
            }
        }
        Ok(out)
    }

    /// `g(u, v)` for coordinate vectors.
    pub fn dot(&self, u: &[f64; 3], v: &[f64; 3]) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += self.g[i][j] * u[i] * v[j];
            }
        }
        s
    }
}

/// Momentum tensor with first derivatives, `dpi[i][j][k] = ∂_k π_ij`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumJet {
    pub pi: [[f64; 3]; 3],
    pub dpi: [[[f64; 3]; 3]; 3],
}

impl MomentumJet {
    pub fn zero() -> Self {
        MomentumJet {
            pi: [[0.0; 3]; 3],
            dpi: [[[0.0; 3]; 3]; 3],
        }
    }
}

/// Coefficients of a data set with harmonic asymptotics,
/// `g = u⁴ δ`, `π = u² (L_X δ − (div X) δ)` with
///
/// * `u = 1 + A/|x| + B·x/|x|³ + Q_ij x^i x^j/|x|⁵`
/// * `X_i = κ_i/|x| + D_ij x^j/|x|³`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicAsymptotics {
    pub a: f64,
    pub b: Vec3,
    pub quadrupole: Mat3,
    pub x_monopole: Vec3,
    pub x_dipole: Mat3,
}

impl HarmonicAsymptotics {
    pub fn new(a: f64, b: Vec3) -> Self {
        HarmonicAsymptotics {
            a,
            b,
            quadrupole: Mat3::zeros(),
            x_monopole: Vec3::zeros(),
            x_dipole: Mat3::zeros(),
        }
    }

    pub fn with_quadrupole(mut self, q: Mat3) -> Self {
        self.quadrupole = q;
        self
    }

    pub fn with_shift(mut self, monopole: Vec3, dipole: Mat3) -> Self {
        self.x_monopole = monopole;
        self.x_dipole = dipole;
        self
    }

    /// Mass read off the monopole coefficient, `m = 2A`.
    pub fn expected_mass(&self) -> f64 {
        2.0 * self.a
    }

    /// Center read off the dipole coefficient, `C = B/A`.
    pub fn expected_center(&self) -> Option<Vec3> {
        (self.a != 0.0).then(|| self.b / self.a)
    }

    pub fn has_momentum(&self) -> bool {
        self.x_monopole.norm() > 0.0 || self.x_dipole.norm() > 0.0
    }
}

/// Named perturbation profiles added on top of a base family.
///
/// All profiles are switched on by a smooth cutoff that vanishes for
/// `|x| < r0` and equals one for `|x| > 2 r0`; `ω = x/|x|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Perturbation {
    /// `h = (1 + ω₃²)|x|^{-rate} δ` with an odd momentum part
    /// `π = (ω⊗d + d⊗ω)|x|^{-rate-1}`.
    Even { rate: f64 },
    /// `h = ω₃ |x|^{-rate} δ`; odd, violates the RT bound when `rate < 1 + q`.
    Odd { rate: f64 },
    /// `h = (ω₁² − ω₂²)|x|^{-rate} δ`.
    Quadrupole { rate: f64 },
    /// Linearized coordinate change `h = L_ξ δ` with
    /// `ξ = |x|^{-q}(x¹, −x², 0) + |x|^{-q-2}(x²x³, x³x¹, x¹x²)`;
    /// its even part decays like `|x|^{-q}` and its odd part like `|x|^{-1-q}`.
    Gauge { q: f64 },
}

impl Perturbation {
    fn metric_rate(&self) -> f64 {
        match *self {
            Perturbation::Even { rate }
            | Perturbation::Odd { rate }
            | Perturbation::Quadrupole { rate } => rate,
            Perturbation::Gauge { q } => q,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Perturbation::Even { .. } => "even",
            Perturbation::Odd { .. } => "odd",
            Perturbation::Quadrupole { .. } => "quadrupole",
            Perturbation::Gauge { .. } => "gauge",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FamilyKind {
    Flat,
    /// `g = u⁴ δ`, `u = 1 + m/(2|x − c|)`, `π = 0`.
    SchwarzschildIsotropic { mass: f64, center: Vec3 },
    HarmonicAsymptotics(HarmonicAsymptotics),
    /// Kerr `t = const` slice in quasi-isotropic Cartesian form, translated to `center`.
    /// Metric only.
    KerrSpatial { mass: f64, spin: f64, center: Vec3 },
    /// Centered Schwarzschild plus `amp · χ(|x|) · (dir·ω) |x|^{-q} δ`.
    RtViolating { mass: f64, q: f64, amp: f64, dir: Vec3 },
    Perturbed {
        base: Box<DataFamily>,
        eps: f64,
        profile: Perturbation,
    },
    /// The base family expressed in the chart `y = O x + a`.
    Transformed {
        base: Box<DataFamily>,
        rotation: Mat3,
        translation: Vec3,
    },
}

/// An analytic asymptotically flat initial data set.
#[derive(Debug, Clone, PartialEq)]
pub struct DataFamily {
    kind: FamilyKind,
    q: f64,
    r0: f64,
}

impl DataFamily {
    fn checked(kind: FamilyKind, q: f64, r0: f64) -> Result<Self> {
        if !(q > 0.5) {
            return Err(Error::Config(format!(
                "decay rate q = {q} must be greater than 1/2"
            )));
        }
        if !(r0 > 0.0) || !r0.is_finite() {
            return Err(Error::Config(format!("chart radius r0 = {r0} must be positive")));
        }
        Ok(DataFamily { kind, q, r0 })
    }

    pub fn flat() -> Self {
        DataFamily {
            kind: FamilyKind::Flat,
            q: 1.0,
            r0: 1.0,
        }
    }

    pub fn schwarzschild(mass: f64, center: Vec3) -> Result<Self> {
        if !(mass >= 0.0) {
            return Err(Error::Config(format!("Schwarzschild mass {mass} must be >= 0")));
        }
        let r0 = center.norm() + mass.max(0.5);
        Self::checked(FamilyKind::SchwarzschildIsotropic { mass, center }, 1.0, r0)
    }

    pub fn harmonic(coeffs: HarmonicAsymptotics, r0: f64) -> Result<Self> {
        if !(r0 > 0.0) {
            return Err(Error::Config(format!("chart radius r0 = {r0} must be positive")));
        }
        // Conservative lower bound of u on |x| >= r0.
        let qnorm = coeffs.quadrupole.norm();
        let u_min = 1.0 - coeffs.a.abs() / r0 - coeffs.b.norm() / (r0 * r0) - qnorm / r0.powi(3);
        if !(u_min > 0.0) {
            return Err(Error::Config(format!(
                "conformal factor may vanish on |x| >= {r0} (lower bound {u_min:.3e})"
            )));
        }
        Self::checked(FamilyKind::HarmonicAsymptotics(coeffs), 1.0, r0)
    }

    pub fn kerr(mass: f64, spin: f64, center: Vec3) -> Result<Self> {
        if !(mass >= 0.0) || spin.abs() > mass && mass > 0.0 {
            return Err(Error::Config(format!(
                "Kerr parameters need m >= 0 and |a| <= m (m = {mass}, a = {spin})"
            )));
        }
        let r0 = center.norm() + 2.0 * mass + spin.abs() + 1.0;
        Self::checked(FamilyKind::KerrSpatial { mass, spin, center }, 1.0, r0)
    }

    pub fn rt_violating(mass: f64, q: f64, amp: f64, dir: Vec3, r0: f64) -> Result<Self> {
        if !(q > 0.5 && q < 1.0) {
            return Err(Error::Config(format!(
                "RT-violating decay rate q = {q} must lie in (1/2, 1)"
            )));
        }
        if !(mass >= 0.0) {
            return Err(Error::Config(format!("mass {mass} must be >= 0")));
        }
        let n = dir.norm();
        if !(n > 0.0) {
            return Err(Error::Config("direction must be nonzero".into()));
        }
        Self::checked(
            FamilyKind::RtViolating {
                mass,
                q,
                amp,
                dir: dir / n,
            },
            q,
            r0,
        )
    }

    pub fn perturbed(base: DataFamily, eps: f64, profile: Perturbation) -> Result<Self> {
        let rate = profile.metric_rate();
        if !(rate > 0.5) {
            return Err(Error::Config(format!(
                "perturbation decay rate {rate} must be greater than 1/2"
            )));
        }
        let q = if eps == 0.0 { base.q } else { base.q.min(rate) };
        let r0 = base.r0;
        Self::checked(
            FamilyKind::Perturbed {
                base: Box::new(base),
                eps,
                profile,
            },
            q,
            r0,
        )
    }

    /// Re-expresses `base` in the chart `y = O x + a`.
    pub fn transformed(base: DataFamily, rotation: Mat3, translation: Vec3) -> Result<Self> {
        let defect = (rotation.transpose() * rotation - Mat3::identity()).abs().max();
        if defect > 1e-12 {
            return Err(Error::Input(format!(
                "transformation matrix is not orthogonal (defect {defect:.3e})"
            )));
        }
        let (q, r0) = (base.q, base.r0 + translation.norm());
        Self::checked(
            FamilyKind::Transformed {
                base: Box::new(base),
                rotation,
                translation,
            },
            q,
            r0,
        )
    }

    pub fn with_decay_rate(mut self, q: f64) -> Result<Self> {
        if !(q > 0.5) {
            return Err(Error::Config(format!(
                "decay rate q = {q} must be greater than 1/2"
            )));
        }
        self.q = q;
        Ok(self)
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    /// Nominal decay rate `q`.
    pub fn q(&self) -> f64 {
        self.q
    }

    /// Inner chart radius `R0`.
    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn name(&self) -> String {
        match &self.kind {
            FamilyKind::Flat => "flat".into(),
            FamilyKind::SchwarzschildIsotropic { .. } => "schwarzschild".into(),
            FamilyKind::HarmonicAsymptotics(_) => "harmonic".into(),
            FamilyKind::KerrSpatial { .. } => "kerr".into(),
            FamilyKind::RtViolating { .. } => "rt-violating".into(),
            FamilyKind::Perturbed { base, profile, .. } => {
                format!("{}+{}", base.name(), profile.name())
            }
            FamilyKind::Transformed { base, .. } => format!("transformed({})", base.name()),
        }
    }

    /// Whether the family supplies a momentum tensor.
    pub fn has_momentum(&self) -> bool {
        match &self.kind {
            FamilyKind::KerrSpatial { .. } => false,
            FamilyKind::Perturbed { base, .. } | FamilyKind::Transformed { base, .. } => {
                base.has_momentum()
            }
            _ => true,
        }
    }

    /// Whether the momentum tensor vanishes identically (time-symmetric data).
    pub fn is_time_symmetric(&self) -> bool {
        match &self.kind {
            FamilyKind::Flat
            | FamilyKind::SchwarzschildIsotropic { .. }
            | FamilyKind::RtViolating { .. } => true,
            FamilyKind::HarmonicAsymptotics(h) => !h.has_momentum(),
            FamilyKind::KerrSpatial { .. } => false,
            FamilyKind::Perturbed { base, eps, profile } => {
                base.is_time_symmetric()
                    && (*eps == 0.0 || !matches!(profile, Perturbation::Even { .. }))
            }
            FamilyKind::Transformed { base, .. } => base.is_time_symmetric(),
        }
    }

    /// Whether the chart covers all of `R³` up to isolated singular points.
    pub fn is_global(&self) -> bool {
        match &self.kind {
            FamilyKind::Flat
            | FamilyKind::SchwarzschildIsotropic { .. }
            | FamilyKind::RtViolating { .. } => true,
            FamilyKind::HarmonicAsymptotics(_) | FamilyKind::KerrSpatial { .. } => false,
            FamilyKind::Perturbed { base, .. } | FamilyKind::Transformed { base, .. } => {
                base.is_global()
            }
        }
    }

    /// Mass known in closed form for the catalog families, if any.
    pub fn reference_mass(&self) -> Option<f64> {
        match &self.kind {
            FamilyKind::Flat => Some(0.0),
            FamilyKind::SchwarzschildIsotropic { mass, .. }
            | FamilyKind::KerrSpatial { mass, .. }
            | FamilyKind::RtViolating { mass, .. } => Some(*mass),
            FamilyKind::HarmonicAsymptotics(h) => Some(h.expected_mass()),
            FamilyKind::Perturbed { .. } => None,
            FamilyKind::Transformed { base, .. } => base.reference_mass(),
        }
    }

    /// Validates that `x` lies inside the region where the family is defined.
    pub fn check_point(&self, x: &ChartPoint) -> Result<()> {
        let r = x.norm();
        if !r.is_finite() {
            return Err(Error::Domain("non-finite chart point".into()));
        }
        match &self.kind {
            FamilyKind::Flat => Ok(()),
            FamilyKind::SchwarzschildIsotropic { center, .. } => {
                if (x.0 - center).norm() <= 1e-12 * (1.0 + center.norm()) {
                    Err(Error::Domain(format!(
                        "evaluation at the Schwarzschild center {center:?}"
                    )))
                } else {
                    Ok(())
                }
            }
            FamilyKind::RtViolating { .. } => {
                if r <= 1e-12 {
                    Err(Error::Domain("evaluation at the origin".into()))
                } else {
                    Ok(())
                }
            }
            FamilyKind::HarmonicAsymptotics(_) | FamilyKind::KerrSpatial { .. } => {
                if r <= self.r0 {
                    Err(Error::Domain(format!(
                        "|x| = {r} lies inside the chart radius {}",
                        self.r0
                    )))
                } else {
                    Ok(())
                }
            }
            FamilyKind::Perturbed { base, .. } => {
                if r <= 1e-12 {
                    return Err(Error::Domain("evaluation at the origin".into()));
                }
                base.check_point(x)
            }
            FamilyKind::Transformed {
                base,
                rotation,
                translation,
            } => base.check_point(&ChartPoint(rotation.transpose() * (x.0 - translation))),
        }
    }

    /// Metric and its first two derivatives at `x`.
    pub fn metric_at(&self, x: &ChartPoint) -> Result<MetricJet> {
        self.check_point(x)?;
        families::metric_jet(self, x)
    }

    /// The added metric term `g − g_base` of a perturbed family, computed directly
    /// rather than as a difference; `None` for other families.
    pub fn perturbation_at(&self, x: &ChartPoint) -> Result<Option<MetricJet>> {
        match &self.kind {
            FamilyKind::Perturbed { eps, profile, .. } => {
                self.check_point(x)?;
                Ok(Some(families::perturbation_term(*eps, profile, self.r0, x)))
            }
            _ => Ok(None),
        }
    }

    /// Momentum tensor `π` and its first derivatives at `x`.
    pub fn momentum_at(&self, x: &ChartPoint) -> Result<MomentumJet> {
        if !self.has_momentum() {
            return Err(Error::Capability(format!(
                "family '{}' does not provide a momentum tensor",
                self.name()
            )));
        }
        self.check_point(x)?;
        families::momentum_jet(self, x)
    }

    /// Conformal factor `u` as a jet when `g = u⁴ δ` exactly.
    pub fn conformal_factor(&self, x: &ChartPoint) -> Result<Option<crate::jet::Jet>> {
        self.check_point(x)?;
        Ok(families::conformal_factor(self, x))
    }
}
