use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::sphere::HarmonicCoefficients;

use super::{RadialGraphSurface, SurfaceGeometry};

/// Galerkin matrices of `L = −Δ_Σ − (|A|² + Ric(ν, ν))` in the spherical-harmonic
/// basis `Y_a`, `l ≤ basis_lmax`, pulled back to the surface:
///
/// * `stiffness_ab = ∫ (γ^{cd} ∂_c Y_a ∂_d Y_b − V Y_a Y_b) dσ_g`
/// * `mass_ab = ∫ Y_a Y_b dσ_g`
#[derive(Debug, Clone)]
pub struct StabilityOperator {
    pub basis_lmax: usize,
    pub stiffness: DMatrix<f64>,
    pub mass: DMatrix<f64>,
    /// `∫ Y_a dσ_g`, the constraint row of the mean-zero problem.
    pub constraint: DVector<f64>,
    /// `‖K − Kᵀ‖ / ‖K‖` of the stiffness before symmetrization.
    pub symmetry_defect: f64,
}

/// Assembles the stability operator with basis degree `basis_lmax`
/// (at most half the grid band limit keeps the quadrature exact on round spheres).
pub fn assemble_stability(
    surface: &RadialGraphSurface,
    geom: &SurfaceGeometry,
    basis_lmax: usize,
) -> Result<StabilityOperator> {
    let grid = surface.grid();
    if geom.nodes.len() != grid.len() {
        return Err(Error::Input("geometry does not belong to this surface".into()));
    }
    let tab = grid.basis_table(basis_lmax)?;
    let (n, nb) = (grid.len(), tab.n_basis);
    let y = DMatrix::from_row_slice(n, nb, &tab.y);
    let yt = DMatrix::from_row_slice(n, nb, &tab.y_t);
    let yp = DMatrix::from_row_slice(n, nb, &tab.y_p);
    let scale_rows = |m: &DMatrix<f64>, f: &dyn Fn(usize) -> f64| {
        let mut out = m.clone();
        for k in 0..n {
            let s = f(k);
            out.row_mut(k).scale_mut(s);
        }
        out
    };
    let nd = &geom.nodes;
    let w_tt = scale_rows(&yt, &|k| nd[k].area_weight * nd[k].gamma_inv[0][0]);
    let w_tp = scale_rows(&yp, &|k| nd[k].area_weight * nd[k].gamma_inv[0][1]);
    let w_pt = scale_rows(&yt, &|k| nd[k].area_weight * nd[k].gamma_inv[1][0]);
    let w_pp = scale_rows(&yp, &|k| nd[k].area_weight * nd[k].gamma_inv[1][1]);
    let w_v = scale_rows(&y, &|k| nd[k].area_weight * (nd[k].a_norm2 + nd[k].ric_nn));
    let w_m = scale_rows(&y, &|k| nd[k].area_weight);

    let grad = yt.transpose() * (&w_tt + &w_tp) + yp.transpose() * (&w_pt + &w_pp);
    let stiffness = grad - y.transpose() * &w_v;
    let mass = y.transpose() * &w_m;
    let ones = DVector::from_element(n, 1.0);
    let constraint = w_m.transpose() * ones;
    let symmetry_defect =
        (&stiffness - stiffness.transpose()).norm() / stiffness.norm().max(f64::MIN_POSITIVE);
    Ok(StabilityOperator {
        basis_lmax,
        symmetry_defect,
        stiffness: symmetrize(stiffness),
        mass: symmetrize(mass),
        constraint,
    })
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

fn generalized_eigenvalues(k: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("mass matrix is not positive definite".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    let c = symmetrize(&linv * k * linv.transpose());
    if c.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite reduced operator".into()));
    }
    let eig = c
        .try_symmetric_eigen(1e-14, 10_000)
        .ok_or_else(|| Error::Numerical(format!("eigensolver did not converge (n = {})", k.nrows())))?;
    let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// The `k` lowest generalized eigenvalues `K c = λ M c`, ascending.
pub fn lowest_eigenvalues(op: &StabilityOperator, k: usize) -> Result<Vec<f64>> {
    let n = op.stiffness.nrows();
    if k > n {
        return Err(Error::Input(format!("{k} eigenvalues requested from a {n}-dimensional operator")));
    }
    let ev = generalized_eigenvalues(&op.stiffness, &op.mass)?;
    Ok(ev[..k].to_vec())
}

impl StabilityOperator {
    pub fn dim(&self) -> usize {
        self.stiffness.nrows()
    }

    /// Lowest eigenvalue restricted to functions with `∫ u dσ_g = 0`.
    pub fn lambda1_meanzero(&self) -> Result<f64> {
        let n = self.dim();
        let bn = self.constraint.norm();
        if !(bn > 0.0) || n < 2 {
            return Err(Error::Numerical("mean-zero constraint is degenerate".into()));
        }
        // Householder reflector mapping e₁ to ±b/|b|; its other columns span b^⊥.
        let mut v = &self.constraint / bn;
        let sign = if v[0] >= 0.0 { 1.0 } else { -1.0 };
        v[0] += sign;
        let vn = v.norm();
        v /= vn;
        let full = DMatrix::<f64>::identity(n, n) - (&v * v.transpose()) * 2.0;
        let z = full.columns(1, n - 1).into_owned();
        let k = z.transpose() * &self.stiffness * &z;
        let m = z.transpose() * &self.mass * &z;
        Ok(generalized_eigenvalues(&k, &m)?[0])
    }

    /// `cᵀ K c` for the basis expansion `u = Σ c_a Y_a`.
    pub fn quadratic_form(&self, u: &HarmonicCoefficients) -> Result<f64> {
        let c = coefficient_vector(u, self.basis_lmax)?;
        Ok(c.dot(&(&self.stiffness * &c)))
    }
}

fn coefficient_vector(u: &HarmonicCoefficients, lb: usize) -> Result<DVector<f64>> {
    if u.lmax() > lb {
        return Err(Error::Input(format!(
            "function of degree {} exceeds operator basis degree {lb}",
            u.lmax()
        )));
    }
    let u = u.resized(lb);
    Ok(DVector::from_column_slice(u.as_slice()))
}
