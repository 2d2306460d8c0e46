use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::initial_data::{ChartPoint, Christoffel, DataFamily, Ricci};
use crate::sphere::pairwise_sum;
use crate::Vec3;

use super::RadialGraphSurface;

/// Geometric data at one node of a surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeGeometry {
    pub position: Vec3,
    /// Tangent vectors `∂_θ X`, `∂_φ X`.
    pub tangents: [Vec3; 2],
    /// Induced metric `γ_ab` in `(θ, φ)`.
    pub gamma: [[f64; 2]; 2],
    pub gamma_inv: [[f64; 2]; 2],
    /// `g`-unit outward normal (vector components).
    pub normal: Vec3,
    /// Second fundamental form `A_ab = g(∇_a ν, ∂_b X)`.
    pub second_form: [[f64; 2]; 2],
    pub mean_curvature: f64,
    pub a_norm2: f64,
    pub ric_nn: f64,
    /// Ambient metric, Ricci tensor and scalar curvature at the node.
    pub metric: [[f64; 3]; 3],
    pub ricci: [[f64; 3]; 3],
    pub scalar_curvature: f64,
    /// `dσ_g` times the quadrature weight of the node.
    pub area_weight: f64,
    /// Euclidean area element times the quadrature weight.
    pub flat_area_weight: f64,
}

/// Per-node geometry of a surface, in grid order.
#[derive(Debug, Clone)]
pub struct SurfaceGeometry {
    pub nodes: Vec<NodeGeometry>,
}

impl SurfaceGeometry {
    pub fn mean_curvature(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.mean_curvature).collect()
    }

    /// `∫ f dσ_g` for node values `f`.
    pub fn integrate(&self, f: &[f64]) -> Result<f64> {
        if f.len() != self.nodes.len() {
            return Err(Error::Input(format!(
                "{} values for {} nodes",
                f.len(),
                self.nodes.len()
            )));
        }
        let prod: Vec<f64> = self.nodes.iter().zip(f).map(|(n, v)| n.area_weight * v).collect();
        Ok(pairwise_sum(&prod))
    }

    pub fn area(&self) -> f64 {
        pairwise_sum(&self.nodes.iter().map(|n| n.area_weight).collect::<Vec<_>>())
    }

    /// `dσ_g`-mean of `H`.
    pub fn mean_h(&self) -> f64 {
        let w: Vec<f64> = self.nodes.iter().map(|n| n.area_weight * n.mean_curvature).collect();
        pairwise_sum(&w) / self.area()
    }

    /// `max |H − mean H|` with the `dσ_g`-mean.
    pub fn h_constancy(&self) -> f64 {
        let m = self.mean_h();
        self.nodes
            .iter()
            .fold(0.0f64, |a, n| a.max((n.mean_curvature - m).abs()))
    }
}

fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    a.cross(b)
}

fn dotg(g: &[[f64; 3]; 3], u: &Vec3, v: &Vec3) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += g[i][j] * u[i] * v[j];
        }
    }
    s
}

/// Induced metric, normal, second fundamental form, mean curvature, area
/// element and `Ric(ν, ν)` at every node of `surface`.
pub fn compute_geometry(surface: &RadialGraphSurface, family: &DataFamily) -> Result<SurfaceGeometry> {
    let grid = surface.grid();
    let d = grid.synthesize(surface.psi())?;
    let p = surface.center();
    let r = surface.radius();
    let nodes: Result<Vec<NodeGeometry>> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let (ct, st, phi) = grid.trig(k);
            let (sp, cp) = phi.sin_cos();
            let w = Vec3::new(st * cp, st * sp, ct);
            let w_t = Vec3::new(ct * cp, ct * sp, -st);
            let w_p = Vec3::new(-st * sp, st * cp, 0.0);
            let w_tp = Vec3::new(-ct * sp, ct * cp, 0.0);
            let w_pp = Vec3::new(-st * cp, -st * sp, 0.0);
            let rho = r + d.f[k];
            let (f_t, f_p) = (d.f_t[k], d.f_p[k]);
            let x_t = f_t * w + rho * w_t;
            let x_p = f_p * w + rho * w_p;
            let x_tt = d.f_tt[k] * w + 2.0 * f_t * w_t - rho * w;
            let x_tp = d.f_tp[k] * w + f_t * w_p + f_p * w_t + rho * w_tp;
            let x_pp = d.f_pp[k] * w + 2.0 * f_p * w_p + rho * w_pp;
            let position = p + rho * w;

            let jet = family.metric_at(&ChartPoint(position))?;
            let ch = Christoffel::from_jet(&jet)?;
            let ric = Ricci::from_christoffel(&ch);
            let g = &jet.g;

            let gamma = [
                [dotg(g, &x_t, &x_t), dotg(g, &x_t, &x_p)],
                [dotg(g, &x_p, &x_t), dotg(g, &x_p, &x_p)],
            ];
            let det = gamma[0][0] * gamma[1][1] - gamma[0][1] * gamma[1][0];
            if !(det > 0.0) || !det.is_finite() {
                return Err(Error::Geometry(format!(
                    "degenerate induced metric at node {k} (det = {det:e})"
                )));
            }
            let gamma_inv = [
                [gamma[1][1] / det, -gamma[0][1] / det],
                [-gamma[1][0] / det, gamma[0][0] / det],
            ];
            // Covector annihilating both tangents, pointing outward.
            let n_low = cross(&x_t, &x_p);
            let mut n_up = Vec3::zeros();
            for i in 0..3 {
                for j in 0..3 {
                    n_up[i] += ch.ginv[i][j] * n_low[j];
                }
            }
            let nn = n_low.dot(&n_up).sqrt();
            let normal = n_up / nn;
            let unit_low = n_low / nn;

            let second = |xa: &Vec3, xb: &Vec3, xab: &Vec3| -> f64 {
                let mut s = 0.0;
                for j in 0..3 {
                    let mut c = xab[j];
                    for kk in 0..3 {
                        for l in 0..3 {
                            c += ch.gamma[j][kk][l] * xa[kk] * xb[l];
                        }
                    }
                    s += unit_low[j] * c;
                }
                -s
            };
            let a_tt = second(&x_t, &x_t, &x_tt);
            let a_tp = second(&x_t, &x_p, &x_tp);
            let a_pp = second(&x_p, &x_p, &x_pp);
            let a = [[a_tt, a_tp], [a_tp, a_pp]];
            let mut h = 0.0;
            let mut a2 = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    h += gamma_inv[i][j] * a[i][j];
                    for kk in 0..2 {
                        for l in 0..2 {
                            a2 += gamma_inv[i][kk] * gamma_inv[j][l] * a[i][j] * a[kk][l];
                        }
                    }
                }
            }
            let nu = [normal.x, normal.y, normal.z];
            let wk = grid.weights()[k] / st;
            Ok(NodeGeometry {
                position,
                tangents: [x_t, x_p],
                gamma,
                gamma_inv,
                normal,
                second_form: a,
                mean_curvature: h,
                a_norm2: a2,
                ric_nn: ric.contract(&nu, &nu),
                metric: jet.g,
                ricci: ric.ric,
                scalar_curvature: ric.scalar,
                area_weight: det.sqrt() * wk,
                flat_area_weight: n_low.norm() * wk,
            })
        })
        .collect();
    Ok(SurfaceGeometry { nodes: nodes? })
}

/// `H` of `S_R(p)` at `x` from the expansion linear in `h = g − δ`:
///
/// `2/R + ½ h_ij,k y^i y^j y^k/R³ + 2 h_ij y^i y^j/R³ − h_ij,i y^j/R
///  + ½ h_ii,j y^j/R − h_ii/R`, `y = x − p`.
pub fn mean_curvature_expansion(family: &DataFamily, p: &Vec3, r: f64, x: &ChartPoint) -> Result<f64> {
    let jet = family.metric_at(x)?;
    let y = x.0 - p;
    let mut h = jet.g;
    for (i, row) in h.iter_mut().enumerate() {
        row[i] -= 1.0;
    }
    let dh = &jet.dg;
    let (mut t1, mut t2, mut t3, mut t4, mut t5) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..3 {
        t5 += h[i][i];
        for j in 0..3 {
            t2 += h[i][j] * y[i] * y[j];
            t3 += dh[i][j][i] * y[j];
            t4 += dh[i][i][j] * y[j];
            for k in 0..3 {
                t1 += dh[i][j][k] * y[i] * y[j] * y[k];
            }
        }
    }
    let r3 = r * r * r;
    Ok(2.0 / r + 0.5 * t1 / r3 + 2.0 * t2 / r3 - t3 / r + 0.5 * t4 / r - t5 / r)
}

/// `g`-area and Euclidean centroid `∫ x dσ₀ / ∫ dσ₀` of a surface.
pub fn area_and_centroid(geom: &SurfaceGeometry) -> (f64, Vec3) {
    let area = geom.area();
    let w: Vec<f64> = geom.nodes.iter().map(|n| n.flat_area_weight).collect();
    let total = pairwise_sum(&w);
    let mut c = Vec3::zeros();
    for a in 0..3 {
        let v: Vec<f64> = geom
            .nodes
            .iter()
            .map(|n| n.flat_area_weight * n.position[a])
            .collect();
        c[a] = pairwise_sum(&v) / total;
    }
    (area, c)
}

/// `∫ Ric(ν, ν) dσ_g`.
pub fn ricci_flux(geom: &SurfaceGeometry) -> f64 {
    let v: Vec<f64> = geom.nodes.iter().map(|n| n.ric_nn * n.area_weight).collect();
    pairwise_sum(&v)
}
