use stoq_core::Error;
use thiserror::Error as ThisError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_HYPOTHESIS: i32 = 3;
pub const EXIT_UNSUPPORTED: i32 = 4;
pub const EXIT_DIVERGENCE: i32 = 5;

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Validation(String),
    #[error("assumptions do not hold: {0}")]
    AssumptionsFailed(String),
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::Core(e) => match e {
                Error::Dimension(_) => "dimension",
                Error::NonFinite(_) => "non_finite",
                Error::InvalidInput(_) => "invalid_input",
                Error::Instability { .. } => "instability",
                Error::Singular { .. } => "singular",
                Error::EigenNotConverged => "eigen_not_converged",
                Error::Infeasible { .. } => "infeasible",
                Error::Uncontrollable => "uncontrollable",
                Error::UnsupportedStructure(_) => "unsupported_structure",
                Error::UnsupportedRegime(_) => "unsupported_regime",
                Error::EstimateNotConverged { .. } => "estimate_not_converged",
                Error::HypothesisViolated(_) => "hypothesis_violated",
                Error::EnumerationLimit { .. } => "enumeration_limit",
                Error::Divergence { .. } => "divergence",
                Error::Config(_) => "config",
            },
            Self::Io(_) => "io",
            Self::Parse(_) => "parse",
            Self::Validation(_) => "validation",
            Self::AssumptionsFailed(_) => "assumptions_failed",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Core(e) => match e {
                Error::Dimension(_)
                | Error::NonFinite(_)
                | Error::InvalidInput(_)
                | Error::Config(_)
                | Error::EnumerationLimit { .. } => EXIT_VALIDATION,
                Error::UnsupportedRegime(_) => EXIT_UNSUPPORTED,
                Error::Divergence { .. } => EXIT_DIVERGENCE,
                _ => EXIT_HYPOTHESIS,
            },
            Self::Io(_) | Self::Parse(_) | Self::Validation(_) => EXIT_VALIDATION,
            Self::AssumptionsFailed(_) => EXIT_HYPOTHESIS,
        }
    }

    /// Single machine-parsable line.
    pub fn line(&self) -> String {
        let message = self.to_string().replace('\n', " ");
        format!("error code={} exit={} message={}", self.code(), self.exit_code(), message)
    }
}
