//! Step sizes that make the quantized output mechanism `(0, δ)`-private.
//!
//! Every bound is a sum of per-step sensitivities `β |C|₁ λ^t ζ` divided by
//! the step size in force at time `t`.

use super::{check_delta, ContractionEstimate};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Horizon {
    Finite(usize),
    Infinite,
}

/// Minimal step sizes for the zoom-in quantizer; `None` where the route's
/// hypothesis fails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicStepBound {
    pub d0_min: Option<f64>,
    pub d_star_min: Option<f64>,
}

fn check_common(est: &ContractionEstimate, c_norm1: f64, zeta: f64) -> Result<()> {
    if !(est.beta > 0.0 && est.lambda > 0.0) {
        return Err(Error::InvalidInput("contraction constants must be positive".into()));
    }
    if !(c_norm1 >= 0.0 && c_norm1.is_finite()) {
        return Err(Error::InvalidInput(format!("|C|₁ must be nonnegative, got {c_norm1}")));
    }
    if !(zeta >= 0.0 && zeta.is_finite()) {
        return Err(Error::InvalidInput(format!("zeta must be nonnegative, got {zeta}")));
    }
    Ok(())
}

/// Relative upward nudge on every designed step so that floating-point
/// rounding cannot push the certified `δ` past the target.
const OUTWARD_ROUNDING: f64 = 1.0 + 64.0 * f64::EPSILON;

/// `Σ_{t=0}^{k} r^t`.
fn geometric_sum(r: f64, k: usize) -> f64 {
    let mut acc = 0.0;
    let mut term = 1.0;
    for _ in 0..=k {
        acc += term;
        term *= r;
    }
    acc
}

/// Smallest static step with `Σ_t β|C|₁λ^tζ / d <= δ`.
pub fn static_step_bound(
    est: &ContractionEstimate,
    c_norm1: f64,
    zeta: f64,
    delta: f64,
    horizon: Horizon,
) -> Result<f64> {
    check_common(est, c_norm1, zeta)?;
    check_delta(delta)?;
    let unit = OUTWARD_ROUNDING * est.beta * c_norm1 * zeta / delta;
    match horizon {
        Horizon::Finite(k) => Ok(unit * geometric_sum(est.lambda, k)),
        Horizon::Infinite if est.lambda < 1.0 => Ok(unit / (1.0 - est.lambda)),
        Horizon::Infinite => Err(Error::UnsupportedRegime(format!(
            "infinite horizon needs lambda < 1 (got {}); use the input-noise design",
            est.lambda
        ))),
    }
}

/// Bounds on `d(0)` (route 1) and `d*` (route 2) for the zoom-in quantizer.
pub fn dynamic_step_bound(
    est: &ContractionEstimate,
    c_norm1: f64,
    zeta: f64,
    delta: f64,
    q: f64,
    horizon: Horizon,
) -> Result<DynamicStepBound> {
    check_common(est, c_norm1, zeta)?;
    check_delta(delta)?;
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::InvalidInput(format!("q must lie in (0, 1], got {q}")));
    }
    let unit = OUTWARD_ROUNDING * est.beta * c_norm1 * zeta / delta;
    let lambda = est.lambda;
    let bound = match horizon {
        Horizon::Finite(k) => DynamicStepBound {
            d0_min: Some(unit * geometric_sum(lambda / q, k)),
            d_star_min: Some(unit * geometric_sum(lambda, k)),
        },
        Horizon::Infinite => DynamicStepBound {
            d0_min: (lambda < q).then(|| unit * q / (q - lambda)),
            d_star_min: (lambda < 1.0).then(|| unit / (1.0 - lambda)),
        },
    };
    if bound.d0_min.is_none() && bound.d_star_min.is_none() {
        return Err(Error::UnsupportedRegime(format!(
            "neither route applies with lambda = {lambda}, q = {q} on an infinite horizon"
        )));
    }
    Ok(bound)
}

/// The `δ` certified by a static step `d` over `horizon`.
pub fn static_delta_for_step(est: &ContractionEstimate, c_norm1: f64, zeta: f64, d: f64, k: usize) -> f64 {
    est.beta * c_norm1 * zeta * geometric_sum(est.lambda, k) / d
}

/// The `δ` certified by route 1 of the zoom-in quantizer for a given `d(0)`.
pub fn dynamic_delta_for_d0(est: &ContractionEstimate, c_norm1: f64, zeta: f64, d0: f64, q: f64, k: usize) -> f64 {
    est.beta * c_norm1 * zeta * geometric_sum(est.lambda / q, k) / d0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn est(beta: f64, lambda: f64) -> ContractionEstimate {
        ContractionEstimate::given(beta, lambda)
    }

    #[test]
    fn static_examples() {
        let d = static_step_bound(&est(1.0, 1.0), 1.0, 0.1, 0.05, Horizon::Finite(1)).unwrap();
        assert!((d - 4.0).abs() < 1e-12);
        assert_eq!(static_step_bound(&est(1.0, 1.0), 1.0, 0.0, 0.05, Horizon::Finite(3)).unwrap(), 0.0);
        let d = static_step_bound(&est(1.0, 0.5), 1.0, 0.1, 0.05, Horizon::Infinite).unwrap();
        assert!((d - 4.0).abs() < 1e-12);
        assert!(matches!(
            static_step_bound(&est(1.0, 1.0), 1.0, 0.1, 0.05, Horizon::Infinite),
            Err(Error::UnsupportedRegime(_))
        ));
        assert!(static_step_bound(&est(1.0, 0.5), 1.0, 0.1, 1.0, Horizon::Finite(1)).is_err());
    }

    #[test]
    fn dynamic_examples() {
        let b = dynamic_step_bound(&est(1.0, 0.5), 1.0, 0.1, 0.05, 0.9, Horizon::Infinite).unwrap();
        assert!((b.d0_min.unwrap() - 4.5).abs() < 1e-12);
        assert!((b.d_star_min.unwrap() - 4.0).abs() < 1e-12);

        let b = dynamic_step_bound(&est(1.0, 1.0), 1.0, 0.1, 0.05, 0.99, Horizon::Infinite);
        assert!(matches!(b, Err(Error::UnsupportedRegime(_))));

        let b = dynamic_step_bound(&est(1.0, 0.95), 1.0, 0.1, 0.05, 0.9, Horizon::Infinite).unwrap();
        assert_eq!(b.d0_min, None);
        assert!(b.d_star_min.is_some());

        let delta1 = dynamic_delta_for_d0(&est(1.0, 1.0), 1.0, 0.1, 10.0, 0.99, 1);
        assert!((delta1 - 0.1 * (1.0 + 1.0 / 0.99) / 10.0).abs() < 1e-15);
        assert!((delta1 - 0.020_101_010_101).abs() < 1e-11);
    }

    #[test]
    fn q_one_reduces_to_static() {
        for &(lambda, h) in &[(0.5, Horizon::Infinite), (0.7, Horizon::Finite(6)), (1.3, Horizon::Finite(3))] {
            let e = est(2.0, lambda);
            let s = static_step_bound(&e, 1.5, 0.2, 0.1, h).unwrap();
            let b = dynamic_step_bound(&e, 1.5, 0.2, 0.1, 1.0, h).unwrap();
            assert!((b.d0_min.unwrap() - s).abs() <= 1e-12 * s);
        }
    }

    proptest! {
        #[test]
        fn static_monotone(lambda in 0.05f64..0.99, d1 in 0.01f64..0.98, dd in 0.001f64..0.5,
                           z in 0.01f64..2.0, dz in 0.0f64..1.0, k in 0usize..20) {
            let e = est(1.0, lambda);
            let d2 = (d1 + dd).min(0.999);
            let f = |delta, zeta, h| static_step_bound(&e, 1.0, zeta, delta, h).unwrap();
            prop_assert!(f(d2, z, Horizon::Finite(k)) <= f(d1, z, Horizon::Finite(k)));
            prop_assert!(f(d1, z + dz, Horizon::Finite(k)) >= f(d1, z, Horizon::Finite(k)));
            prop_assert!(f(d1, z, Horizon::Finite(k + 1)) >= f(d1, z, Horizon::Finite(k)));
            prop_assert!(f(d1, z, Horizon::Infinite) >= f(d1, z, Horizon::Finite(k)) * (1.0 - 1e-12));
        }

        #[test]
        fn dynamic_d0_nonincreasing_in_q(lambda in 0.05f64..0.9, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let e = est(1.0, lambda);
            let q1 = lambda + (1.0 - lambda) * a.min(b).max(1e-3);
            let q2 = lambda + (1.0 - lambda) * a.max(b).max(1e-3);
            let d = |q| dynamic_step_bound(&e, 1.0, 0.1, 0.05, q, Horizon::Infinite).unwrap().d0_min.unwrap();
            prop_assert!(d(q2) <= d(q1) * (1.0 + 1e-12));
        }
    }
}
