use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// A point lies outside the region where the asymptotic chart is defined,
    /// or hits a coordinate singularity of the family.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid construction parameters (family, grid, settings).
    #[error("configuration error: {0}")]
    Config(String),

    /// The family does not provide the requested quantity.
    #[error("capability error: {0}")]
    Capability(String),

    #[error("degenerate metric: {0}")]
    DegenerateMetric(String),

    /// Malformed input data (sizes, sample counts, orthogonality).
    #[error("input error: {0}")]
    Input(String),

    #[error("fit error: {0}")]
    Fit(String),

    /// The l = 1 block of a Helmholtz right-hand side is not negligible.
    #[error("kernel obstruction: l = 1 projection {projection:?} exceeds tolerance {tol:e}")]
    KernelObstruction { projection: [f64; 3], tol: f64 },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    /// A charge normalized by the mass was requested while the mass vanishes.
    #[error("normalization error: {0}")]
    Normalization(String),

    /// The empirical parity check rejects the RT condition.
    #[error("RT condition rejected: {0}")]
    RtViolation(String),

    /// The l = 1 kernel cannot be removed by moving the center (zero mass).
    #[error("obstruction: {0}")]
    Obstruction(String),

    #[error("no convergence after {iterations} iterations: {detail}")]
    NonConvergence {
        iterations: usize,
        detail: String,
        residuals: Vec<f64>,
    },

    #[error("iteration diverged: {detail}")]
    Divergence { detail: String, residuals: Vec<f64> },

    /// A surface sequence fails one of the admissibility conditions.
    #[error("admissibility condition ({condition}) violated: {detail}")]
    Admissibility { condition: u8, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Refusals are principled "not defined here" outcomes rather than failures.
    pub fn is_refusal(&self) -> bool {
        matches!(
            self,
            Error::Normalization(_)
                | Error::RtViolation(_)
                | Error::Obstruction(_)
                | Error::Capability(_)
                | Error::Admissibility { .. }
        )
    }
}
