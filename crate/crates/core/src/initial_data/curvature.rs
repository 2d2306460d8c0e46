use crate::error::Result;

use super::{ChartPoint, DataFamily, MetricJet, MomentumJet};

/// Christoffel symbols `Γ^k_ij` (index order `[k][i][j]`) and their
/// derivatives `∂_m Γ^k_ij` (`[k][i][j][m]`).
#[derive(Debug, Clone, Copy)]
pub struct Christoffel {
    pub ginv: [[f64; 3]; 3],
    pub gamma: [[[f64; 3]; 3]; 3],
    pub dgamma: [[[[f64; 3]; 3]; 3]; 3],
}

impl Christoffel {
    pub fn from_jet(j: &MetricJet) -> Result<Self> {
        let ginv = j.inverse()?;
        // first-kind symbols Γ_lij = ½(g_li,j + g_lj,i − g_ij,l)
        let mut first = [[[0.0; 3]; 3]; 3];
        let mut dfirst = [[[[0.0; 3]; 3]; 3]; 3];
        for l in 0..3 {
            for i in 0..3 {
                for jj in 0..3 {
                    first[l][i][jj] = 0.5 * (j.dg[l][i][jj] + j.dg[l][jj][i] - j.dg[i][jj][l]);
                    for m in 0..3 {
                        dfirst[l][i][jj][m] = 0.5
                            * (j.ddg[l][i][jj][m] + j.ddg[l][jj][i][m] - j.ddg[i][jj][l][m]);
                    }
                }
            }
        }
        // ∂_m g^{kl} = −g^{ka} ∂_m g_ab g^{bl}
        let mut dginv = [[[0.0; 3]; 3]; 3];
        for k in 0..3 {
            for l in 0..3 {
                for m in 0..3 {
                    let mut s = 0.0;
                    for a in 0..3 {
                        for b in 0..3 {
                            s -= ginv[k][a] * j.dg[a][b][m] * ginv[b][l];
                        }
                    }
                    dginv[k][l][m] = s;
                }
            }
        }
        let mut gamma = [[[0.0; 3]; 3]; 3];
        let mut dgamma = [[[[0.0; 3]; 3]; 3]; 3];
        for k in 0..3 {
            for i in 0..3 {
                for jj in i..3 {
                    let mut s = 0.0;
                    let mut ds = [0.0; 3];
                    for l in 0..3 {
                        s += ginv[k][l] * first[l][i][jj];
                        for m in 0..3 {
                            ds[m] += dginv[k][l][m] * first[l][i][jj]
                                + ginv[k][l] * dfirst[l][i][jj][m];
                        }
                    }
                    gamma[k][i][jj] = s;
                    gamma[k][jj][i] = s;
                    dgamma[k][i][jj] = ds;
                    dgamma[k][jj][i] = ds;
                }
            }
        }
        Ok(Christoffel {
            ginv,
            gamma,
            dgamma,
        })
    }
}

/// Ricci tensor and scalar curvature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ricci {
    pub ric: [[f64; 3]; 3],
    pub scalar: f64,
}

impl Ricci {
    pub fn from_christoffel(c: &Christoffel) -> Self {
        let mut ric = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in i..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += c.dgamma[k][i][j][k] - c.dgamma[k][i][k][j];
                    for l in 0..3 {
                        s += c.gamma[k][k][l] * c.gamma[l][i][j] - c.gamma[k][j][l] * c.gamma[l][i][k];
                    }
                }
                ric[i][j] = s;
                ric[j][i] = s;
            }
        }
        let mut scalar = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                scalar += c.ginv[i][j] * ric[i][j];
            }
        }
        Ricci { ric, scalar }
    }

    /// `Ric(v, w)` for coordinate vectors.
    pub fn contract(&self, v: &[f64; 3], w: &[f64; 3]) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += self.ric[i][j] * v[i] * w[j];
            }
        }
        s
    }
}

/// Ricci curvature from the coordinate Christoffel symbols of the metric jet.
pub fn ricci_at(family: &DataFamily, x: &ChartPoint) -> Result<Ricci> {
    let j = family.metric_at(x)?;
    Ok(Ricci::from_christoffel(&Christoffel::from_jet(&j)?))
}

/// Ricci curvature of `g = u⁴ δ` from the conformal factor:
/// `R_ij = −2u⁻¹ ∂_i∂_j u + 6u⁻² ∂_i u ∂_j u − 2(u⁻¹ Δu + u⁻² |∇u|²) δ_ij`.
///
/// Returns `None` for families that are not conformally flat.
pub fn ricci_conformal(family: &DataFamily, x: &ChartPoint) -> Result<Option<Ricci>> {
    let Some(u) = family.conformal_factor(x)? else {
        return Ok(None);
    };
    let inv = 1.0 / u.v;
    let lap = u.laplacian();
    let grad2 = u.g.iter().map(|d| d * d).sum::<f64>();
    let mut ric = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in i..3 {
            let mut v = -2.0 * inv * u.h[i][j] + 6.0 * inv * inv * u.g[i] * u.g[j];
            if i == j {
                v -= 2.0 * (inv * lap + inv * inv * grad2);
            }
            ric[i][j] = v;
            ric[j][i] = v;
        }
    }
    let u4 = u.v.powi(4);
    let scalar = (ric[0][0] + ric[1][1] + ric[2][2]) / u4;
    Ok(Some(Ricci { ric, scalar }))
}

/// Local energy and momentum densities from the constraint equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintDensities {
    pub mu: f64,
    /// `J_j = (div_g π)_j` as a covector.
    pub j: [f64; 3],
}

impl ConstraintDensities {
    pub fn momentum_norm(&self) -> f64 {
        self.j.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// `2μ = R_g − |π|²_g + ½(tr_g π)²`, `J = div_g π`.
pub fn constraint_residual(family: &DataFamily, x: &ChartPoint) -> Result<ConstraintDensities> {
    let pj = family.momentum_at(x)?;
    let mj = family.metric_at(x)?;
    let ch = Christoffel::from_jet(&mj)?;
    let ricci = Ricci::from_christoffel(&ch);
    Ok(densities(&ch, &ricci, &pj))
}

pub(crate) fn densities(ch: &Christoffel, ricci: &Ricci, pj: &MomentumJet) -> ConstraintDensities {
    let gi = &ch.ginv;
    let pi = &pj.pi;
    let mut tr = 0.0;
    let mut norm2 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            tr += gi[i][j] * pi[i][j];
            for a in 0..3 {
                for b in 0..3 {
                    norm2 += gi[i][a] * gi[j][b] * pi[i][j] * pi[a][b];
                }
            }
        }
    }
    let mu = 0.5 * (ricci.scalar - norm2 + 0.5 * tr * tr);
    // (div π)_j = g^{ik} (∂_k π_ij − Γ^l_ki π_lj − Γ^l_kj π_il)
    let mut jv = [0.0; 3];
    for (j, out) in jv.iter_mut().enumerate() {
        let mut s = 0.0;
        for i in 0..3 {
            for k in 0..3 {
                let mut cov = pj.dpi[i][j][k];
                for l in 0..3 {
                    cov -= ch.gamma[l][k][i] * pi[l][j] + ch.gamma[l][k][j] * pi[i][l];
                }
                s += gi[i][k] * cov;
            }
        }
        *out = s;
    }
    ConstraintDensities { mu, j: jv }
}
