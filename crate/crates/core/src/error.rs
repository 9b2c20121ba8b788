use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the design, simulation and audit routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not Schur stable (spectral radius {spectral_radius})")]
    Instability { spectral_radius: f64 },

    #[error("matrix is singular or not positive definite (smallest eigenvalue {min_eigenvalue})")]
    Singular { min_eigenvalue: f64 },

    #[error("eigenvalue iteration did not converge")]
    EigenNotConverged,

    #[error("regulator equations are infeasible (residual {residual:e})")]
    Infeasible { residual: f64 },

    #[error("pair (A, B) is not controllable")]
    Uncontrollable,

    #[error("unsupported plant structure: {0}")]
    UnsupportedStructure(String),

    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    #[error("contraction estimate did not converge within k_max = {k_max}; increase k_max or margin")]
    EstimateNotConverged { k_max: usize },

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("audit needs {components} components, enumeration limit is {limit}")]
    EnumerationLimit { components: usize, limit: usize },

    #[error("state diverged at step {step}")]
    Divergence { step: usize },

    #[error("configuration error: {0}")]
    Config(String),
}
