use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{extrapolate_vec, Extrapolation};
use crate::initial_data::DataFamily;
use crate::Vec3;

use super::{require_nonzero_mass, select_center, solve_from, FoliationLeaf, SolveSettings};

/// Radial comparison of two consecutive leaves about the inner leaf's center.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisjointnessCheck {
    pub inner_radius: f64,
    pub outer_radius: f64,
    /// `min_ω (ρ_outer − ρ_inner)`.
    pub min_gap: f64,
    pub max_gap: f64,
    pub disjoint: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Foliation {
    pub leaves: Vec<FoliationLeaf>,
    pub checks: Vec<DisjointnessCheck>,
    /// `None` when `m ≤ 0`.
    pub all_stable: Option<bool>,
    pub disjoint: bool,
}

/// Solves a leaf at every radius (concurrently) and compares consecutive leaves.
/// Overlaps are reported in [`Foliation::checks`], not raised.
pub fn foliation_sweep(family: &DataFamily, radii: &[f64], settings: &SolveSettings) -> Result<Foliation> {
    settings.validate()?;
    if radii.is_empty() {
        return Err(Error::Input("empty radius list".into()));
    }
    if radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Input("radii must be strictly increasing".into()));
    }
    let m = settings.resolve_mass(family, radii[0])?;
    require_nonzero_mass(m)?;
    let fixed = SolveSettings {
        mass: Some(m),
        ..settings.clone()
    };
    let grid = fixed.grid()?;
    let leaves: Result<Vec<FoliationLeaf>> = radii
        .par_iter()
        .map(|&r| {
            let p0 = select_center(family, r, &Vec3::zeros(), &fixed)?;
            solve_from(family, r, p0, m, grid.clone(), &fixed)
        })
        .collect();
    let leaves = leaves?;
    let checks: Result<Vec<DisjointnessCheck>> = leaves.windows(2).map(|w| compare(&w[0], &w[1])).collect();
    let checks = checks?;
    let all_stable = if m > 0.0 {
        Some(leaves.iter().all(|l| l.strictly_stable == Some(true)))
    } else {
        None
    };
    Ok(Foliation {
        disjoint: checks.iter().all(|c| c.disjoint),
        leaves,
        checks,
        all_stable,
    })
}

fn compare(inner: &FoliationLeaf, outer: &FoliationLeaf) -> Result<DisjointnessCheck> {
    let origin = inner.surface.center();
    let nodes = inner.surface.grid().nodes();
    let gaps: Result<Vec<f64>> = nodes
        .par_iter()
        .map(|w| {
            let a = inner.surface.radial_function_about(&origin, w)?;
            let b = outer.surface.radial_function_about(&origin, w)?;
            Ok(b - a)
        })
        .collect();
    let gaps = gaps?;
    let min_gap = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    let max_gap = gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(DisjointnessCheck {
        inner_radius: inner.radius,
        outer_radius: outer.radius,
        min_gap,
        max_gap,
        disjoint: min_gap > 0.0,
    })
}

/// Leaf centroids and their extrapolation to `R → ∞`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeometricCenter {
    pub radii: Vec<f64>,
    pub centroids: Vec<Vec3>,
    pub components: [Extrapolation; 3],
}

impl GeometricCenter {
    pub fn value(&self) -> Vec3 {
        Vec3::new(self.components[0].value, self.components[1].value, self.components[2].value)
    }

    pub fn error_norm(&self) -> f64 {
        self.components.iter().map(|e| e.error * e.error).sum::<f64>().sqrt()
    }
}

pub fn geometric_center_limit(leaves: &[FoliationLeaf]) -> Result<GeometricCenter> {
    if leaves.len() < 4 {
        return Err(Error::Input(format!(
            "the geometric center needs at least 4 leaves, got {}",
            leaves.len()
        )));
    }
    let radii: Vec<f64> = leaves.iter().map(|l| l.radius).collect();
    let centroids: Vec<Vec3> = leaves.iter().map(|l| l.centroid).collect();
    let vals: Vec<[f64; 3]> = centroids.iter().map(|c| [c[0], c[1], c[2]]).collect();
    let components = extrapolate_vec(&radii, &vals)?;
    Ok(GeometricCenter {
        radii,
        centroids,
        components,
    })
}
