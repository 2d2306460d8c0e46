//! Run configuration: TOML schema, parsing and validation.
//!
//! Parsing happens in two passes. The top level is deserialized directly so
//! syntax and type errors carry line numbers; each `[[tasks]]` table is then
//! split into the shared keys and the kind-specific keys, so unknown keys are
//! still rejected with a `tasks[i].key` pointer.

use std::fmt;
use std::path::{Path, PathBuf};

use asymflat::charges::RadiusSchedule;
use asymflat::cmc::SolveSettings;
use asymflat::{DataFamily, HarmonicAsymptotics, Mat3, Perturbation, Vec3};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_LMAX: usize = 32;
pub const DEFAULT_RADII: [f64; 5] = [100.0, 200.0, 400.0, 800.0, 1600.0];

/// A schema violation with the location it refers to.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub pointer: String,
    pub message: String,
}

impl ConfigError {
    fn new(pointer: impl Into<String>, message: impl fmt::Display) -> Self {
        ConfigError {
            pointer: pointer.into(),
            message: message.to_string(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pointer.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.pointer, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

/// Data family declaration, `[family]` in the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FamilySpec {
    Flat,
    Schwarzschild {
        mass: f64,
        #[serde(default)]
        center: [f64; 3],
    },
    Harmonic {
        a: f64,
        #[serde(default)]
        b: [f64; 3],
        #[serde(default)]
        quadrupole: Option<[[f64; 3]; 3]>,
        #[serde(default)]
        x_monopole: Option<[f64; 3]>,
        #[serde(default)]
        x_dipole: Option<[[f64; 3]; 3]>,
        r0: f64,
    },
    Kerr {
        mass: f64,
        spin: f64,
        #[serde(default)]
        center: [f64; 3],
    },
    RtViolating {
        mass: f64,
        q: f64,
        amp: f64,
        dir: [f64; 3],
        r0: f64,
    },
    Perturbed {
        base: Box<FamilySpec>,
        eps: f64,
        perturbation: Perturbation,
    },
    /// `rotation` takes precedence over `euler` (x-y-z Euler angles in radians).
    Transformed {
        base: Box<FamilySpec>,
        #[serde(default)]
        rotation: Option<[[f64; 3]; 3]>,
        #[serde(default)]
        euler: Option<[f64; 3]>,
        #[serde(default)]
        translation: [f64; 3],
    },
}

fn mat(m: &[[f64; 3]; 3]) -> Mat3 {
    Mat3::from_fn(|i, j| m[i][j])
}

pub fn rotation_matrix(rotation: &Option<[[f64; 3]; 3]>, euler: &Option<[f64; 3]>) -> Mat3 {
    match (rotation, euler) {
        (Some(r), _) => mat(r),
        (None, Some(e)) => *nalgebra::Rotation3::from_euler_angles(e[0], e[1], e[2]).matrix(),
        (None, None) => Mat3::identity(),
    }
}

impl FamilySpec {
    pub fn build(&self) -> asymflat::Result<DataFamily> {
        match self {
            FamilySpec::Flat => Ok(DataFamily::flat()),
            FamilySpec::Schwarzschild { mass, center } => DataFamily::schwarzschild(*mass, Vec3::from(*center)),
            FamilySpec::Harmonic {
                a,
                b,
                quadrupole,
                x_monopole,
                x_dipole,
                r0,
            } => {
                let mut h = HarmonicAsymptotics::new(*a, Vec3::from(*b));
                if let Some(q) = quadrupole {
                    h = h.with_quadrupole(mat(q));
                }
                if x_monopole.is_some() || x_dipole.is_some() {
                    let k = Vec3::from(x_monopole.unwrap_or_default());
                    let d = x_dipole.as_ref().map_or_else(Mat3::zeros, mat);
                    h = h.with_shift(k, d);
                }
                DataFamily::harmonic(h, *r0)
            }
            FamilySpec::Kerr { mass, spin, center } => DataFamily::kerr(*mass, *spin, Vec3::from(*center)),
            FamilySpec::RtViolating { mass, q, amp, dir, r0 } => {
                DataFamily::rt_violating(*mass, *q, *amp, Vec3::from(*dir), *r0)
            }
            FamilySpec::Perturbed {
                base,
                eps,
                perturbation,
            } => DataFamily::perturbed(base.build()?, *eps, *perturbation),
            FamilySpec::Transformed {
                base,
                rotation,
                euler,
                translation,
            } => DataFamily::transformed(
                base.build()?,
                rotation_matrix(rotation, euler),
                Vec3::from(*translation),
            ),
        }
    }
}

/// CMC solver options shared by the foliation and eigen tasks.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub cmc_tol: Option<f64>,
    pub max_picard_iters: Option<usize>,
    pub center_tol: Option<f64>,
    pub damping: Option<f64>,
    pub stability_lmax: Option<usize>,
    pub mass: Option<f64>,
}

impl SolverSpec {
    pub fn settings(&self, lmax: usize) -> SolveSettings {
        let d = SolveSettings::default();
        SolveSettings {
            lmax,
            cmc_tol: self.cmc_tol,
            max_picard_iters: self.max_picard_iters.unwrap_or(d.max_picard_iters),
            center_tol: self.center_tol.unwrap_or(d.center_tol),
            damping: self.damping.unwrap_or(d.damping),
            stability_lmax: self.stability_lmax,
            mass: self.mass,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SobolevField {
    /// `g − g_base` of a perturbed family.
    Perturbation,
    /// `g − δ`.
    Metric,
    /// Odd part of `g − δ`.
    Odd,
}

fn default_k() -> usize {
    2
}

fn default_p() -> f64 {
    2.0
}

fn default_count() -> usize {
    4
}

/// Kind-specific task options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TaskKind {
    Charges,
    Intrinsic,
    /// Residual of the center identity on `S_R(p)` for every radius.
    CenterIdentity {
        #[serde(default)]
        p: [f64; 3],
    },
    Sobolev {
        #[serde(default = "default_field")]
        field: SobolevField,
        #[serde(default = "default_k")]
        k: usize,
        #[serde(default = "default_p")]
        p: f64,
        /// Weight exponent; defaults to the family decay rate.
        #[serde(default)]
        q: Option<f64>,
        /// Annulus `[inner, outer]`; `inner` defaults to the first radius, no `outer` means `∞`.
        #[serde(default)]
        inner: Option<f64>,
        #[serde(default)]
        outer: Option<f64>,
    },
    Continuity {
        perturbation: Perturbation,
        #[serde(default)]
        eps: Option<Vec<f64>>,
        #[serde(default = "default_k")]
        k: usize,
        #[serde(default = "default_p")]
        p: f64,
        #[serde(default)]
        norm_inner: Option<f64>,
    },
    TransformCheck {
        #[serde(default)]
        rotation: Option<[[f64; 3]; 3]>,
        #[serde(default)]
        euler: Option<[f64; 3]>,
        #[serde(default)]
        translation: [f64; 3],
    },
    RtCheck,
    Foliation {
        #[serde(default)]
        solver: SolverSpec,
        /// Write a per-node CSV for every leaf.
        #[serde(default)]
        leaf_nodes: bool,
    },
    /// Stability spectrum of the CMC leaf at every radius.
    Eigen {
        #[serde(default)]
        solver: SolverSpec,
        #[serde(default = "default_count")]
        count: usize,
    },
}

fn default_field() -> SobolevField {
    SobolevField::Perturbation
}

impl TaskKind {
    pub fn name(&self) -> &'static str {
        match self {
            TaskKind::Charges => "charges",
            TaskKind::Intrinsic => "intrinsic",
            TaskKind::CenterIdentity { .. } => "center-identity",
            TaskKind::Sobolev { .. } => "sobolev",
            TaskKind::Continuity { .. } => "continuity",
            TaskKind::TransformCheck { .. } => "transform-check",
            TaskKind::RtCheck => "rt-check",
            TaskKind::Foliation { .. } => "foliation",
            TaskKind::Eigen { .. } => "eigen",
        }
    }

    /// Metric names a task of this kind can produce (for assertion checks).
    pub fn metric_names(&self) -> Vec<String> {
        let vector = |n: &str| ["x", "y", "z"].iter().map(|c| format!("{n}.{c}")).collect::<Vec<_>>();
        let mut out: Vec<String> = Vec::new();
        match self {
            TaskKind::Charges => {
                out.push("m".into());
                for n in ["P", "C", "J", "C_I"] {
                    out.extend(vector(n));
                }
                out.extend(["m_I".into(), "rt_accepted".into()]);
            }
            TaskKind::Intrinsic => {
                out.extend(["m".into(), "m_I".into(), "m_I_flat".into(), "asymmetry_slope".into()]);
                out.extend(vector("C_I"));
                out.extend(vector("C_I_flat"));
            }
            TaskKind::CenterIdentity { .. } => {
                out.extend(["residual_max".into(), "residual_slope".into()]);
            }
            TaskKind::Sobolev { .. } => out.extend(["norm".into(), "converged".into()]),
            TaskKind::Continuity { .. } => {
                for n in [
                    "mass_slope",
                    "momentum_slope",
                    "center_slope",
                    "angular_slope",
                    "rt_bound_satisfied",
                    "c_converges",
                    "expected_fail",
                ] {
                    out.push(n.into());
                }
            }
            TaskKind::TransformCheck { .. } => {
                out.extend(["max_deviation".into(), "mass_deviation".into(), "center_deviation".into()]);
            }
            TaskKind::RtCheck => {
                out.extend(["accepted".into(), "metric_odd_exponent".into(), "momentum_even_exponent".into()]);
            }
            TaskKind::Foliation { .. } => {
                for n in [
                    "leaves",
                    "disjoint",
                    "all_stable",
                    "min_gap",
                    "max_h_constancy",
                    "max_iterations",
                    "ricci_mass",
                ] {
                    out.push(n.into());
                }
                out.extend(vector("center"));
            }
            TaskKind::Eigen { .. } => {
                for n in ["lambda0_r2", "lambda1_r3_over_m", "lambda1_meanzero_min", "strictly_stable"] {
                    out.push(n.into());
                }
            }
        }
        out
    }
}

/// A check on one metric of a task: `|value − expected| ≤ tol` and/or `min ≤ value ≤ max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assertion {
    pub metric: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

impl Assertion {
    pub fn describe(&self) -> String {
        let mut parts = Vec::new();
        if let Some(e) = self.expected {
            parts.push(format!("|{} - {e}| <= {}", self.metric, self.tol.unwrap_or(0.0)));
        }
        if let Some(m) = self.min {
            parts.push(format!("{} >= {m}", self.metric));
        }
        if let Some(m) = self.max {
            parts.push(format!("{} <= {m}", self.metric));
        }
        parts.join(" and ")
    }

    pub fn holds(&self, v: f64) -> bool {
        let mut ok = v.is_finite() || self.expected.is_none() && self.min.is_none();
        if let Some(e) = self.expected {
            ok &= (v - e).abs() <= self.tol.unwrap_or(0.0);
        }
        if let Some(m) = self.min {
            ok &= v >= m;
        }
        if let Some(m) = self.max {
            ok &= v <= m;
        }
        ok
    }
}

/// Keys every task accepts next to `kind`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskCommon {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lmax: Option<usize>,
    /// The task must end in a refusal (e.g. the center of zero-mass data).
    #[serde(default)]
    pub expect_refusal: bool,
    #[serde(default, rename = "assert", skip_serializing_if = "Vec::is_empty")]
    pub assertions: Vec<Assertion>,
}

const COMMON_KEYS: [&str; 5] = ["label", "radii", "lmax", "expect_refusal", "assert"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskSpec {
    #[serde(flatten)]
    pub kind: TaskKind,
    #[serde(flatten)]
    pub common: TaskCommon,
}

impl TaskSpec {
    pub fn label(&self, index: usize) -> String {
        self.common
            .label
            .clone()
            .unwrap_or_else(|| format!("{:02}-{}", index, self.kind.name()))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema_version: u32,
    #[serde(default)]
    name: Option<String>,
    family: FamilySpec,
    #[serde(default)]
    lmax: Option<usize>,
    #[serde(default)]
    radii: Option<Vec<f64>>,
    #[serde(default)]
    output: Option<PathBuf>,
    #[serde(default)]
    force_rt: bool,
    #[serde(default)]
    tasks: Vec<toml::Table>,
}

/// A parsed, schema-valid run configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub family: FamilySpec,
    pub lmax: usize,
    pub radii: Vec<f64>,
    #[serde(skip)]
    pub output: Option<PathBuf>,
    pub force_rt: bool,
    pub tasks: Vec<TaskSpec>,
}

fn parse_task(i: usize, mut table: toml::Table) -> Result<TaskSpec, ConfigError> {
    let at = format!("tasks[{i}]");
    let mut common = toml::Table::new();
    for k in COMMON_KEYS {
        if let Some(v) = table.remove(k) {
            common.insert(k.to_string(), v);
        }
    }
    let common: TaskCommon = toml::Value::Table(common)
        .try_into()
        .map_err(|e: toml::de::Error| ConfigError::new(&at, e.message()))?;
    if !table.contains_key("kind") {
        return Err(ConfigError::new(&at, "missing field `kind`"));
    }
    let kind: TaskKind = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| ConfigError::new(&at, e.message()))?;
    Ok(TaskSpec { kind, common })
}

/// Reads and validates a config file. No computation is performed.
pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new(path.display().to_string(), format!("cannot read: {e}")))?;
    parse(&text, &path.display().to_string())
}

pub fn parse(text: &str, source: &str) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let pointer = match e.span() {
            Some(s) => {
                let line = text[..s.start.min(text.len())].matches('\n').count() + 1;
                format!("{source}:{line}")
            }
            None => source.to_string(),
        };
        ConfigError::new(pointer, e.message())
    })?;
    let tasks = raw
        .tasks
        .into_iter()
        .enumerate()
        .map(|(i, t)| parse_task(i, t))
        .collect::<Result<Vec<_>, _>>()?;
    let cfg = RunConfig {
        schema_version: raw.schema_version,
        name: raw.name,
        family: raw.family,
        lmax: raw.lmax.unwrap_or(DEFAULT_LMAX),
        radii: raw.radii.unwrap_or_else(|| DEFAULT_RADII.to_vec()),
        output: raw.output,
        force_rt: raw.force_rt,
        tasks,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn check_lmax(pointer: &str, lmax: usize) -> Result<(), ConfigError> {
    if !(4..=256).contains(&lmax) {
        return Err(ConfigError::new(pointer, format!("lmax {lmax} must lie in 4..=256")));
    }
    Ok(())
}

fn check_radii(pointer: &str, radii: &[f64], family: &DataFamily) -> Result<(), ConfigError> {
    let s = RadiusSchedule::new(radii.to_vec()).map_err(|e| ConfigError::new(pointer, e))?;
    s.check_chart(family).map_err(|e| ConfigError::new(pointer, e))
}

fn positive(pointer: &str, v: Option<f64>) -> Result<(), ConfigError> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(ConfigError::new(pointer, format!("{x} must be positive"))),
        _ => Ok(()),
    }
}

impl RunConfig {
    /// Schema and parameter checks; builds the family but evaluates nothing on it.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::new(
                "schema_version",
                format!("unsupported version {} (this build reads {SCHEMA_VERSION})", self.schema_version),
            ));
        }
        let family = self.family.build().map_err(|e| ConfigError::new("family", e))?;
        check_lmax("lmax", self.lmax)?;
        check_radii("radii", &self.radii, &family)?;
        let mut labels = std::collections::BTreeSet::new();
        for (i, t) in self.tasks.iter().enumerate() {
            let at = format!("tasks[{i}]");
            if !labels.insert(t.label(i)) {
                return Err(ConfigError::new(format!("{at}.label"), format!("duplicate label `{}`", t.label(i))));
            }
            if let Some(l) = t.common.lmax {
                check_lmax(&format!("{at}.lmax"), l)?;
            }
            if let Some(r) = &t.common.radii {
                check_radii(&format!("{at}.radii"), r, &family)?;
            }
            let names = t.kind.metric_names();
            for (j, a) in t.common.assertions.iter().enumerate() {
                let ap = format!("{at}.assert[{j}]");
                if !names.contains(&a.metric) {
                    return Err(ConfigError::new(
                        ap,
                        format!("unknown metric `{}` for {}; expected one of {}", a.metric, t.kind.name(), names.join(", ")),
                    ));
                }
                if a.expected.is_none() && a.min.is_none() && a.max.is_none() {
                    return Err(ConfigError::new(ap, "needs `expected` (with `tol`), `min` or `max`"));
                }
                if a.expected.is_some() != a.tol.is_some() {
                    return Err(ConfigError::new(ap, "`expected` and `tol` go together"));
                }
                if let Some(tol) = a.tol {
                    if !(tol >= 0.0) {
                        return Err(ConfigError::new(ap, format!("tol {tol} must be >= 0")));
                    }
                }
            }
            self.validate_kind(&at, t, &family)?;
        }
        Ok(())
    }

    fn validate_kind(&self, at: &str, t: &TaskSpec, family: &DataFamily) -> Result<(), ConfigError> {
        let lmax = t.common.lmax.unwrap_or(self.lmax);
        match &t.kind {
            TaskKind::Sobolev { k, p, q, inner, outer, .. } => {
                if *k > 2 {
                    return Err(ConfigError::new(format!("{at}.k"), format!("order {k} is not supported (k <= 2)")));
                }
                if !(*p >= 1.0) {
                    return Err(ConfigError::new(format!("{at}.p"), format!("exponent {p} must be >= 1")));
                }
                positive(&format!("{at}.q"), *q)?;
                positive(&format!("{at}.inner"), *inner)?;
                if let (Some(a), Some(b)) = (inner, outer) {
                    if !(b > a) {
                        return Err(ConfigError::new(format!("{at}.outer"), format!("{b} must exceed inner {a}")));
                    }
                }
            }
            TaskKind::Continuity {
                perturbation,
                eps,
                k,
                p,
                norm_inner,
            } => {
                DataFamily::perturbed(family.clone(), 1.0, *perturbation)
                    .map_err(|e| ConfigError::new(format!("{at}.perturbation"), e))?;
                if let Some(eps) = eps {
                    if eps.is_empty() || eps.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
                        return Err(ConfigError::new(format!("{at}.eps"), "must be a non-empty list of values >= 0"));
                    }
                }
                if *k > 2 || !(*p >= 1.0) {
                    return Err(ConfigError::new(at, format!("unsupported norm W^{{{k},{p}}}")));
                }
                positive(&format!("{at}.norm_inner"), *norm_inner)?;
            }
            TaskKind::TransformCheck {
                rotation,
                euler,
                translation,
            } => {
                DataFamily::transformed(family.clone(), rotation_matrix(rotation, euler), Vec3::from(*translation))
                    .map_err(|e| ConfigError::new(format!("{at}.rotation"), e))?;
            }
            TaskKind::Foliation { solver, .. } | TaskKind::Eigen { solver, .. } => {
                solver
                    .settings(lmax)
                    .validate()
                    .map_err(|e| ConfigError::new(format!("{at}.solver"), e))?;
                if let TaskKind::Eigen { count, .. } = &t.kind {
                    if *count == 0 {
                        return Err(ConfigError::new(format!("{at}.count"), "must be positive"));
                    }
                }
            }
            TaskKind::Charges | TaskKind::Intrinsic | TaskKind::CenterIdentity { .. } | TaskKind::RtCheck => {}
        }
        Ok(())
    }

    /// Applies command-line overrides.
    pub fn override_with(&mut self, lmax: Option<usize>, force_rt: bool) -> Result<(), ConfigError> {
        if let Some(l) = lmax {
            check_lmax("--lmax", l)?;
            self.lmax = l;
            for t in &mut self.tasks {
                t.common.lmax = None;
            }
        }
        self.force_rt |= force_rt;
        Ok(())
    }
}
