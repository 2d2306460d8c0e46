//! Execution of the individual tasks of a run.

use std::f64::consts::PI;
use std::sync::Arc;

use asymflat::charges::{
    adm_mass, center_identity_residual, center_of_mass_hamiltonian, charge_continuity_experiment,
    compute_charges, coordinate_transform_check, intrinsic_center_on_spheres, intrinsic_mass,
    metric_perturbation_sampler, odd_part_sampler, perturbation_sampler, weighted_sobolev_norm, Annulus,
    ChargeOptions, ContinuitySettings, RadiusSchedule, ScalarCharge, VectorCharge,
};
use asymflat::cmc::{foliation_sweep, geometric_center_limit, solve_cmc, FoliationLeaf};
use asymflat::fit::log_log_slope;
use asymflat::initial_data::rt_check;
use asymflat::surface::{assemble_stability, compute_geometry, lowest_eigenvalues};
use asymflat::{build_grid, DataFamily, Error, Extrapolation, Vec3};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{rotation_matrix, RunConfig, SobolevField, TaskKind, TaskSpec};

/// A reported number with its error estimate (`None` when there is none to give).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metric {
    pub value: f64,
    pub error: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    Refused,
    Error,
}

/// A radius-vs-value series for `plotdata/`.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub radius: Vec<f64>,
    pub value: Vec<f64>,
}

/// Rows of the per-task CSV; `None` cells are written empty.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

/// Per-node data of one leaf.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafNodes {
    pub radius: f64,
    pub table: Table,
}

#[derive(Debug, Clone)]
pub struct TaskOutput {
    pub status: Status,
    pub message: Option<String>,
    pub radii: Vec<f64>,
    pub lmax: usize,
    pub metrics: Vec<(String, Metric)>,
    /// `(quantity, reason)` for parts of the task that were refused.
    pub refusals: Vec<(String, String)>,
    pub detail: Value,
    pub table: Table,
    pub series: Vec<Series>,
    pub leaves: Vec<LeafNodes>,
}

impl TaskOutput {
    fn new(radii: Vec<f64>, lmax: usize) -> Self {
        TaskOutput {
            status: Status::Ok,
            message: None,
            radii,
            lmax,
            metrics: Vec::new(),
            refusals: Vec::new(),
            detail: Value::Null,
            table: Table::default(),
            series: Vec::new(),
            leaves: Vec::new(),
        }
    }

    fn metric(&mut self, name: &str, value: f64, error: Option<f64>) {
        self.metrics.push((name.to_string(), Metric { value, error }));
    }

    fn flag(&mut self, name: &str, b: bool) {
        self.metric(name, if b { 1.0 } else { 0.0 }, None);
    }

    fn scalar(&mut self, name: &str, c: &ScalarCharge) {
        self.metric(name, c.value, Some(c.error));
        self.series.push(Series {
            name: name.to_string(),
            radius: c.radii.clone(),
            value: c.per_radius.clone(),
        });
    }

    fn vector(&mut self, name: &str, c: &VectorCharge) {
        for (i, axis) in ["x", "y", "z"].iter().enumerate() {
            let n = format!("{name}.{axis}");
            self.metric(&n, c.value[i], Some(c.error[i]));
            self.series.push(Series {
                name: n,
                radius: c.radii.clone(),
                value: c.per_radius.iter().map(|v| v[i]).collect(),
            });
        }
    }

    fn extrapolated(&mut self, name: &str, e: &Extrapolation) {
        self.metric(name, e.value, Some(e.error));
    }

    pub fn metric_value(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|(n, _)| n == name).map(|(_, m)| m.value)
    }
}

/// A task-level failure: refusals are principled, everything else is an error.
fn fail(mut out: TaskOutput, e: Error) -> TaskOutput {
    out.status = if e.is_refusal() { Status::Refused } else { Status::Error };
    out.message = Some(e.to_string());
    out
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

/// Table with one row per radius built from the series collected so far.
fn series_table(series: &[Series], radii: &[f64]) -> Table {
    let mut header = vec!["radius".to_string()];
    header.extend(series.iter().map(|s| s.name.clone()));
    let rows = radii
        .iter()
        .map(|&r| {
            let mut row = vec![Some(r)];
            for s in series {
                row.push(s.radius.iter().position(|x| *x == r).map(|k| s.value[k]));
            }
            row
        })
        .collect();
    Table { header, rows }
}

pub fn run_task(cfg: &RunConfig, family: &DataFamily, task: &TaskSpec) -> TaskOutput {
    let radii = task.common.radii.clone().unwrap_or_else(|| cfg.radii.clone());
    let lmax = task.common.lmax.unwrap_or(cfg.lmax);
    let out = TaskOutput::new(radii.clone(), lmax);
    let result = match &task.kind {
        TaskKind::Foliation { solver, leaf_nodes } => foliation(out.clone(), family, solver, *leaf_nodes),
        TaskKind::Eigen { solver, count } => eigen(out.clone(), family, solver, *count),
        kind => spectral_task(out.clone(), cfg, family, kind),
    };
    match result {
        Ok(o) => o,
        Err(e) => fail(out, e),
    }
}

fn spectral_task(mut out: TaskOutput, cfg: &RunConfig, family: &DataFamily, kind: &TaskKind) -> asymflat::Result<TaskOutput> {
    let grid = build_grid(out.lmax)?;
    let schedule = RadiusSchedule::new(out.radii.clone())?;
    match kind {
        TaskKind::Charges => {
            let rep = compute_charges(family, &schedule, &grid, ChargeOptions { force_rt: cfg.force_rt })?;
            out.scalar("m", &rep.mass);
            if let Some(p) = &rep.momentum {
                out.vector("P", p);
            }
            if let Some(c) = &rep.center {
                out.vector("C", &c.charge);
            }
            if let Some(j) = &rep.angular_momentum {
                out.vector("J", j);
            }
            if let Some(m) = &rep.intrinsic_mass {
                out.scalar("m_I", &m.exact);
            }
            if let Some(c) = &rep.intrinsic_center {
                out.vector("C_I", &c.exact);
            }
            if let Some(rt) = &rep.rt {
                out.flag("rt_accepted", rt.accepted);
            }
            out.refusals = rep.refusals.clone();
            out.detail = to_value(&rep);
        }
        TaskKind::Intrinsic => {
            let m = adm_mass(family, &schedule, &grid)?;
            out.scalar("m", &m);
            let mi = intrinsic_mass(family, &schedule, &grid)?;
            out.scalar("m_I", &mi.exact);
            out.scalar("m_I_flat", &mi.flat);
            match intrinsic_center_on_spheres(family, &schedule, &grid, m.value) {
                Ok(c) => {
                    out.vector("C_I", &c.exact);
                    out.vector("C_I_flat", &c.flat);
                    if let Some(s) = c.admissibility.asymmetry_slope {
                        out.metric("asymmetry_slope", s, None);
                    }
                    out.detail = json!({ "mass": mi, "center": c });
                }
                Err(e) if e.is_refusal() => {
                    out.refusals.push(("C_I".into(), e.to_string()));
                    out.detail = json!({ "mass": mi });
                }
                Err(e) => return Err(e),
            }
        }
        TaskKind::CenterIdentity { p } => {
            let m = adm_mass(family, &schedule, &grid)?;
            let c = center_of_mass_hamiltonian(family, &schedule, &grid, m.value, cfg.force_rt)?;
            let grid = Arc::new(grid);
            let p = Vec3::from(*p);
            let mut res = Vec::new();
            for &r in &out.radii {
                let v = center_identity_residual(family, &p, r, m.value, &c.charge.vector(), Arc::clone(&grid))?;
                res.push(Vec3::from(v).norm() / (8.0 * PI * m.value.abs()));
            }
            let worst = res.iter().copied().fold(0.0, f64::max);
            out.metric("residual_max", worst, None);
            if let Some(s) = log_log_slope(&out.radii, &res) {
                out.metric("residual_slope", s, None);
            }
            out.series.push(Series {
                name: "residual".into(),
                radius: out.radii.clone(),
                value: res.clone(),
            });
            out.detail = json!({ "p": p.as_slice(), "mass": m, "center": c.charge, "residual": res });
        }
        TaskKind::Sobolev {
            field,
            k,
            p,
            q,
            inner,
            outer,
        } => {
            let sampler = match field {
                SobolevField::Perturbation => perturbation_sampler(family)?,
                SobolevField::Metric => metric_perturbation_sampler(family),
                SobolevField::Odd => odd_part_sampler(family),
            };
            let a = inner.unwrap_or(out.radii[0]);
            let annulus = match outer {
                Some(b) => Annulus::Finite { inner: a, outer: *b },
                None => Annulus::Infinite { inner: a },
            };
            let q = q.unwrap_or_else(|| family.q());
            let n = weighted_sobolev_norm(&*sampler, *k, *p, q, annulus, &grid)?;
            out.metric("norm", n.value, None);
            out.flag("converged", n.converged);
            let shells: Vec<f64> = (0..n.partial.len()).map(|j| a * 2f64.powi(j as i32 + 1)).collect();
            out.series.push(Series {
                name: "partial".into(),
                radius: shells,
                value: n.partial.clone(),
            });
            out.detail = json!({ "annulus": annulus, "q": q, "norm": n });
        }
        TaskKind::Continuity {
            perturbation,
            eps,
            k,
            p,
            norm_inner,
        } => {
            let mut s = ContinuitySettings {
                sobolev_k: *k,
                sobolev_p: *p,
                norm_inner: *norm_inner,
                ..ContinuitySettings::default()
            };
            if let Some(e) = eps {
                s.eps = e.clone();
            }
            let t = charge_continuity_experiment(family, *perturbation, &s, &schedule, &grid)?;
            for (name, v) in [
                ("mass_slope", t.mass_slope),
                ("momentum_slope", t.momentum_slope),
                ("center_slope", t.center_slope),
                ("angular_slope", t.angular_slope),
            ] {
                if let Some(v) = v {
                    out.metric(name, v, None);
                }
            }
            out.flag("rt_bound_satisfied", t.rt_bound_satisfied);
            out.flag("c_converges", t.c_converges);
            out.flag("expected_fail", t.expected_fail);
            out.table = Table {
                header: ["eps", "norm", "dm_ref", "dm", "dp_ref", "dp", "dc_ref", "dc", "dj_ref", "dj"]
                    .map(String::from)
                    .to_vec(),
                rows: t
                    .rows
                    .iter()
                    .map(|r| {
                        vec![
                            Some(r.eps),
                            Some(r.norm),
                            Some(r.dm_ref),
                            Some(r.dm),
                            r.dp_ref,
                            r.dp,
                            r.dc_ref,
                            r.dc,
                            r.dj_ref,
                            r.dj,
                        ]
                    })
                    .collect(),
            };
            out.detail = to_value(&t);
            return Ok(out);
        }
        TaskKind::TransformCheck {
            rotation,
            euler,
            translation,
        } => {
            let o = rotation_matrix(rotation, euler);
            let t = coordinate_transform_check(family, o, Vec3::from(*translation), &schedule, &grid)?;
            out.metric("max_deviation", t.max_deviation(), None);
            out.metric("mass_deviation", t.mass.deviation, Some(t.before.mass.error + t.after.mass.error));
            if let Some(c) = &t.center {
                out.metric("center_deviation", c.deviation, None);
            }
            out.refusals = t.after.refusals.clone();
            out.detail = to_value(&t);
        }
        TaskKind::RtCheck => {
            let rt = rt_check(family, &grid, &out.radii)?;
            out.flag("accepted", rt.accepted);
            if let Some(f) = &rt.metric_odd_fit {
                out.metric("metric_odd_exponent", f.exponent, None);
            }
            if let Some(f) = &rt.momentum_even_fit {
                out.metric("momentum_even_exponent", f.exponent, None);
            }
            out.series.push(Series {
                name: "metric_odd".into(),
                radius: rt.radii.clone(),
                value: rt.metric_odd.clone(),
            });
            if !rt.momentum_even.is_empty() {
                out.series.push(Series {
                    name: "momentum_even".into(),
                    radius: rt.radii.clone(),
                    value: rt.momentum_even.clone(),
                });
            }
            out.detail = to_value(&rt);
        }
        TaskKind::Foliation { .. } | TaskKind::Eigen { .. } => unreachable!("handled by run_task"),
    }
    out.table = series_table(&out.series, &out.radii);
    Ok(out)
}

fn leaf_summary(l: &FoliationLeaf) -> Value {
    json!({
        "radius": l.radius,
        "h_target": l.h_target,
        "h_constancy": l.h_constancy,
        "cmc_tol": l.cmc_tol,
        "p_star": l.p_star.as_slice(),
        "centroid": l.centroid.as_slice(),
        "psi_sup": l.psi_sup,
        "lambda0": l.lambda0,
        "lambda1": l.lambda1,
        "lambda1_meanzero": l.lambda1_meanzero,
        "strictly_stable": l.strictly_stable,
        "area_g": l.area_g,
        "ricci_mass": l.ricci_mass,
        "mass": l.mass,
        "iterations": l.residuals.len() - 1,
        "residuals": l.residuals,
        "contraction": l.contraction,
    })
}

fn leaf_nodes(l: &FoliationLeaf) -> asymflat::Result<LeafNodes> {
    let s = &l.surface;
    let pos = s.positions()?;
    let psi = s.psi_values()?;
    let rows = (0..pos.len())
        .map(|k| {
            let (t, p) = s.grid().angles(k);
            vec![
                Some(t),
                Some(p),
                Some(pos[k].x),
                Some(pos[k].y),
                Some(pos[k].z),
                Some(psi[k]),
                Some(l.h_achieved[k]),
            ]
        })
        .collect();
    Ok(LeafNodes {
        radius: l.radius,
        table: Table {
            header: ["theta", "phi", "x", "y", "z", "psi", "H"].map(String::from).to_vec(),
            rows,
        },
    })
}

fn foliation(
    mut out: TaskOutput,
    family: &DataFamily,
    solver: &crate::config::SolverSpec,
    nodes: bool,
) -> asymflat::Result<TaskOutput> {
    let settings = solver.settings(out.lmax);
    let fol = foliation_sweep(family, &out.radii, &settings)?;
    let leaves = &fol.leaves;
    out.metric("leaves", leaves.len() as f64, None);
    out.flag("disjoint", fol.disjoint);
    if let Some(s) = fol.all_stable {
        out.flag("all_stable", s);
    }
    if let Some(g) = fol.checks.iter().map(|c| c.min_gap).reduce(f64::min) {
        out.metric("min_gap", g, None);
    }
    let worst = leaves.iter().map(|l| l.h_constancy).fold(0.0, f64::max);
    out.metric("max_h_constancy", worst, None);
    let iters = leaves.iter().map(|l| l.residuals.len() - 1).max().unwrap_or(0);
    out.metric("max_iterations", iters as f64, None);
    if leaves.len() >= 4 {
        let rm: Vec<f64> = leaves.iter().map(|l| l.ricci_mass).collect();
        let e = asymflat::fit::extrapolate(&out.radii, &rm)?;
        out.extrapolated("ricci_mass", &e);
        let gc = geometric_center_limit(leaves)?;
        for (i, axis) in ["x", "y", "z"].iter().enumerate() {
            out.extrapolated(&format!("center.{axis}"), &gc.components[i]);
        }
    }
    let col = |name: &str, f: &dyn Fn(&FoliationLeaf) -> f64| Series {
        name: name.into(),
        radius: out.radii.clone(),
        value: leaves.iter().map(f).collect(),
    };
    out.series = vec![
        col("h_target", &|l| l.h_target),
        col("h_constancy", &|l| l.h_constancy),
        col("psi_sup", &|l| l.psi_sup),
        col("centroid.x", &|l| l.centroid.x),
        col("centroid.y", &|l| l.centroid.y),
        col("centroid.z", &|l| l.centroid.z),
        col("p_star.x", &|l| l.p_star.x),
        col("p_star.y", &|l| l.p_star.y),
        col("p_star.z", &|l| l.p_star.z),
        col("lambda0", &|l| l.lambda0),
        col("lambda1", &|l| l.lambda1),
        col("ricci_mass", &|l| l.ricci_mass),
    ];
    out.table = series_table(&out.series, &out.radii);
    if nodes {
        out.leaves = leaves.iter().map(leaf_nodes).collect::<asymflat::Result<_>>()?;
    }
    out.detail = json!({
        "settings": settings,
        "disjoint": fol.disjoint,
        "all_stable": fol.all_stable,
        "checks": fol.checks,
        "leaves": leaves.iter().map(leaf_summary).collect::<Vec<_>>(),
    });
    Ok(out)
}

fn eigen(
    mut out: TaskOutput,
    family: &DataFamily,
    solver: &crate::config::SolverSpec,
    count: usize,
) -> asymflat::Result<TaskOutput> {
    let settings = solver.settings(out.lmax);
    let basis = settings.stability_lmax.unwrap_or(out.lmax / 2);
    let mut rows = Vec::new();
    let mut stable = Some(true);
    let mut spectra = Vec::new();
    for &r in &out.radii {
        let l = solve_cmc(family, r, &settings)?;
        let geom = compute_geometry(&l.surface, family)?;
        let op = assemble_stability(&l.surface, &geom, basis)?;
        let ev = lowest_eigenvalues(&op, count.min(op.dim()))?;
        stable = match (stable, l.strictly_stable) {
            (Some(a), Some(b)) => Some(a && b),
            _ => None,
        };
        rows.push((r, l.lambda0 * r * r, l.lambda1 * r.powi(3) / l.mass, l.lambda1_meanzero));
        spectra.push(json!({ "radius": r, "mass": l.mass, "eigenvalues": ev, "lambda1_meanzero": l.lambda1_meanzero }));
    }
    let last = rows[rows.len() - 1];
    out.metric("lambda0_r2", last.1, None);
    out.metric("lambda1_r3_over_m", last.2, None);
    out.metric("lambda1_meanzero_min", rows.iter().map(|r| r.3).fold(f64::INFINITY, f64::min), None);
    if let Some(s) = stable {
        out.flag("strictly_stable", s);
    }
    out.series = vec![
        Series {
            name: "lambda0_r2".into(),
            radius: out.radii.clone(),
            value: rows.iter().map(|r| r.1).collect(),
        },
        Series {
            name: "lambda1_r3_over_m".into(),
            radius: out.radii.clone(),
            value: rows.iter().map(|r| r.2).collect(),
        },
        Series {
            name: "lambda1_meanzero".into(),
            radius: out.radii.clone(),
            value: rows.iter().map(|r| r.3).collect(),
        },
    ];
    out.table = series_table(&out.series, &out.radii);
    out.detail = json!({ "basis_lmax": basis, "settings": settings, "spectra": spectra });
    Ok(out)
}
