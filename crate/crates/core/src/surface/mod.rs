//! Geometry of closed radial graphs `X(ω) = p + (R + ψ(ω)) ω` in an
//! asymptotically flat manifold.

mod geometry;
mod stability;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::sphere::{HarmonicCoefficients, SphereGrid};
use crate::Vec3;

pub use geometry::{
    area_and_centroid, compute_geometry, mean_curvature_expansion, ricci_flux, NodeGeometry,
    SurfaceGeometry,
};
pub use stability::{assemble_stability, lowest_eigenvalues, StabilityOperator};

/// A radial graph over the coordinate sphere `S_R(p)`. The offset `ψ` is kept
/// as a band-limited harmonic expansion on `grid`.
#[derive(Debug, Clone)]
pub struct RadialGraphSurface {
    center: Vec3,
    radius: f64,
    psi: HarmonicCoefficients,
    grid: Arc<SphereGrid>,
}

impl RadialGraphSurface {
    /// The coordinate sphere `S_R(p)`.
    pub fn sphere(center: Vec3, radius: f64, grid: Arc<SphereGrid>) -> Result<Self> {
        let psi = HarmonicCoefficients::zeros(grid.lmax());
        Self::new(center, radius, psi, grid)
    }

    pub fn new(
        center: Vec3,
        radius: f64,
        psi: HarmonicCoefficients,
        grid: Arc<SphereGrid>,
    ) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Geometry(format!("radius {radius} must be positive")));
        }
        if psi.lmax() > grid.lmax() {
            return Err(Error::Input(format!(
                "offset of degree {} exceeds grid lmax {}",
                psi.lmax(),
                grid.lmax()
            )));
        }
        let psi = psi.resized(grid.lmax());
        let s = RadialGraphSurface {
            center,
            radius,
            psi,
            grid,
        };
        let vals = s.psi_values()?;
        if let Some(v) = vals.iter().find(|v| !(radius + **v > 0.0)) {
            return Err(Error::Geometry(format!(
                "radial function R + ψ = {} is not positive",
                radius + v
            )));
        }
        Ok(s)
    }

    /// Radial graph of a star-shaped surface given by its radial function about `center`.
    pub fn from_radial_function<F>(center: Vec3, radius: f64, grid: Arc<SphereGrid>, rho: F) -> Result<Self>
    where
        F: Fn(&Vec3) -> f64 + Sync + Send,
    {
        let vals = grid.sample(|w| rho(w) - radius);
        let psi = grid.sht_forward(&vals)?;
        Self::new(center, radius, psi, grid)
    }

    pub fn center(&self) -> Vec3 {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn psi(&self) -> &HarmonicCoefficients {
        &self.psi
    }

    pub fn grid(&self) -> &SphereGrid {
        &self.grid
    }

    pub fn grid_arc(&self) -> Arc<SphereGrid> {
        Arc::clone(&self.grid)
    }

    /// `ψ` at the grid nodes.
    pub fn psi_values(&self) -> Result<Vec<f64>> {
        self.grid.sht_inverse(&self.psi)
    }

    /// Surface points at the grid nodes.
    pub fn positions(&self) -> Result<Vec<Vec3>> {
        let psi = self.psi_values()?;
        Ok(self
            .grid
            .nodes()
            .iter()
            .zip(&psi)
            .map(|(w, f)| self.center + (self.radius + f) * w)
            .collect())
    }

    /// Radial function `R + ψ(ω)` in an arbitrary direction.
    pub fn radial_function(&self, w: &Vec3) -> f64 {
        self.radius + self.psi.evaluate(w)
    }

    /// Distance from `origin` to the surface along the ray in direction `w`
    /// (Illinois regula falsi). The surface must enclose `origin`.
    pub fn radial_function_about(&self, origin: &Vec3, w: &Vec3) -> Result<f64> {
        let p = self.center - origin;
        // f(t) = |tω − p| − ρ(direction of tω − p); negative inside.
        let f = |t: f64| {
            let d = t * w - p;
            let n = d.norm();
            if n == 0.0 {
                return -self.radial_function(w);
            }
            n - self.radial_function(&(d / n))
        };
        let (mut lo, mut hi) = (0.0, self.radius + p.norm());
        let (mut flo, mut fhi) = (f(lo), f(hi));
        if !(flo < 0.0) {
            return Err(Error::Geometry("surface does not enclose the origin".into()));
        }
        let mut grow = 0;
        while fhi <= 0.0 {
            hi *= 2.0;
            fhi = f(hi);
            grow += 1;
            if grow > 60 {
                return Err(Error::Geometry("ray does not leave the surface".into()));
            }
        }
        let mut side = 0i8;
        for _ in 0..200 {
            let t = (lo * fhi - hi * flo) / (fhi - flo);
            let ft = f(t);
            if ft == 0.0 || (hi - lo) <= 4.0 * f64::EPSILON * hi {
                return Ok(t);
            }
            if ft < 0.0 {
                lo = t;
                flo = ft;
                if side == -1 {
                    fhi *= 0.5;
                }
                side = -1;
            } else {
                hi = t;
                fhi = ft;
                if side == 1 {
                    flo *= 0.5;
                }
                side = 1;
            }
            if (hi - lo).abs() <= 1e-14 * hi {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Same surface with a different center and offset.
    pub fn with(&self, center: Vec3, psi: HarmonicCoefficients) -> Result<Self> {
        Self::new(center, self.radius, psi, Arc::clone(&self.grid))
    }
}
