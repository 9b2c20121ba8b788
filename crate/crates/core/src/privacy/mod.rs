//! Differential-privacy design and auditing for quantized output mechanisms.
//!
//! The protected quantity is the plant's initial state; two initial states are
//! adjacent when their 1-norm distance is at most `zeta`.

mod audit;
mod contraction;
mod designers;
mod gaussian;

pub use audit::{audit_zero_eps, audit_mechanism, AUDIT_COMPONENT_LIMIT};
pub use contraction::{estimate_beta_lambda, ContractionEstimate, DEFAULT_K_MAX, DEFAULT_MARGIN};
pub use designers::{
    dynamic_delta_for_d0, dynamic_step_bound, static_delta_for_step, static_step_bound, DynamicStepBound, Horizon,
};
pub use gaussian::{
    design_unstable_mechanism, gaussian_sensitivity, implied_delta2, kappa, kappa_inverse, std_normal_cdf,
    UnstableDesign, UnstableParams,
};

use crate::error::{Error, Result};

/// Target `(ε, δ)` over adjacency radius `ζ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyBudget {
    pub epsilon: f64,
    pub delta: f64,
    pub zeta: f64,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, delta: f64, zeta: f64) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidInput(format!("epsilon must be nonnegative, got {epsilon}")));
        }
        check_delta(delta)?;
        if !(zeta > 0.0 && zeta.is_finite()) {
            return Err(Error::InvalidInput(format!("zeta must be positive, got {zeta}")));
        }
        Ok(Self { epsilon, delta, zeta })
    }
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("delta must lie in (0, 1), got {delta}")))
    }
}
