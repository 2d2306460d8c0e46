//! Conserved charges, center-of-mass identities and constant mean curvature
//! foliations of asymptotically flat initial data sets.
//!
//! The crate is organized bottom-up:
//!
//! * [`initial_data`]: analytic data families with exact derivative jets,
//!   curvature, constraints and parity checks.
//! * [`sphere`]: Gauss–Legendre sphere grids, real spherical-harmonic
//!   transforms and the `Δ₀ + 2/R²` solve.
//! * [`surface`]: geometry of radial graphs, stability operators.
//! * [`charges`]: flux-integral charges and the related experiments.
//! * [`cmc`]: approximate spheres, CMC leaves and foliation sweeps.

// Tensor components are indexed explicitly; `!(x > 0.0)` deliberately rejects NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod charges;
pub mod cmc;
pub mod error;
pub mod fit;
pub mod initial_data;
pub mod jet;
pub mod sphere;
pub mod surface;

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;

pub use error::{Error, Result};
pub use fit::Extrapolation;
pub use initial_data::{ChartPoint, DataFamily, FamilyKind, HarmonicAsymptotics, Perturbation};
pub use sphere::{build_grid, HarmonicCoefficients, L1Policy, SphereGrid};
pub use surface::{RadialGraphSurface, SurfaceGeometry};
