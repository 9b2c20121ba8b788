//! Input-noise design for plants whose state matrix is not Schur stable.
//!
//! Gaussian noise on the input channel during the first `n*` steps makes the
//! state `x(n*)` an `(ε₀, δ₂)`-private Gaussian mechanism of `x₀`, while the
//! quantized outputs before `n*` do not depend on the noise (all Markov
//! parameters `C A^k B`, `k <= n* - 2`, vanish) and cost `δ₁`.


use super::{check_delta, dynamic_step_bound, ContractionEstimate, Horizon};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::plant::{controllability_data, markov_zero_check, ControllabilityData, LtiPlant};
use crate::quantizers::StepSchedule;

const MARKOV_TOL: f64 = 1e-10;

pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Exact privacy curve of the unit-variance Gaussian mechanism with
/// sensitivity `s`: `Φ(s/2 - ε/s) - e^ε Φ(-s/2 - ε/s)`.
pub fn kappa(epsilon: f64, s: f64) -> f64 {
    if !(s > 0.0) {
        return 0.0;
    }
    let a = std_normal_cdf(s / 2.0 - epsilon / s);
    let b = std_normal_cdf(-s / 2.0 - epsilon / s);
    let scaled_b = if b > 0.0 { (epsilon + b.ln()).exp() } else { 0.0 };
    (a - scaled_b).max(0.0)
}

/// Sensitivity-to-noise ratio `s` with `κ(ε, s) = δ`, by bisection.
pub fn kappa_inverse(epsilon: f64, delta: f64) -> Result<f64> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidInput(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    check_delta(delta)?;
    let mut lo = 1e-12;
    if kappa(epsilon, lo) >= delta {
        return Ok(lo);
    }
    let mut hi = 1.0;
    while kappa(epsilon, hi) < delta {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::InvalidInput(format!("delta = {delta} is not reachable")));
        }
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if kappa(epsilon, mid) < delta {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `|Δ^{-1/2} A^{n*}|₂`: how far one unit of initial-state change moves the
/// whitened state at time `n*`.
pub fn gaussian_sensitivity(plant: &LtiPlant, cd: &ControllabilityData) -> Result<f64> {
    let whiten = linalg::spd_inverse_sqrt(&cd.delta)?;
    let propagated: Matrix = whiten * linalg::matrix_power(&plant.a, cd.n_star);
    linalg::induced_norm_2(&propagated)
}

/// `δ₂` implied by a noise level `sigma`.
pub fn implied_delta2(sensitivity: f64, zeta: f64, epsilon0: f64, sigma: f64) -> f64 {
    kappa(epsilon0, sensitivity * zeta / sigma)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnstableParams {
    pub zeta: f64,
    pub epsilon0: f64,
    pub delta1: f64,
    pub delta2: f64,
    /// Decay ratio of the step schedule; 1 for a static quantizer.
    pub q: f64,
    /// Terminal step for `q < 1`; defaults to zero.
    pub d_star: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnstableDesign {
    pub n_star: usize,
    pub schedule: StepSchedule,
    /// Input-noise standard deviation for `k < n*`.
    pub sigma: f64,
    pub epsilon0: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub sensitivity: f64,
}

impl UnstableDesign {
    pub fn total_epsilon(&self) -> f64 {
        self.epsilon0
    }

    pub fn total_delta(&self) -> f64 {
        self.delta1 + self.delta2
    }
}

/// Quantizer schedule plus input-noise level giving `(ε₀, δ₁ + δ₂)` privacy
/// at every time.
pub fn design_unstable_mechanism(
    plant: &LtiPlant,
    est: &ContractionEstimate,
    params: &UnstableParams,
) -> Result<UnstableDesign> {
    check_delta(params.delta1)?;
    check_delta(params.delta2)?;
    if !(params.zeta > 0.0) {
        return Err(Error::InvalidInput(format!("zeta must be positive, got {}", params.zeta)));
    }
    let cd = controllability_data(plant)?;
    if !markov_zero_check(plant, cd.n_star, MARKOV_TOL) {
        return Err(Error::UnsupportedStructure(format!(
            "C A^k B must vanish for 0 <= k <= {} (n* = {})",
            cd.n_star as i64 - 2,
            cd.n_star
        )));
    }
    let c_norm1 = linalg::induced_norm_1(&plant.c)?;
    let bound = dynamic_step_bound(est, c_norm1, params.zeta, params.delta1, params.q, Horizon::Finite(cd.n_star - 1))?;
    let d0 = bound.d0_min.expect("finite horizon always yields a d(0) bound");
    let schedule = if params.q == 1.0 {
        StepSchedule::fixed(d0)?
    } else {
        StepSchedule::new(d0, params.d_star.unwrap_or(0.0), params.q)?
    };

    let sensitivity = gaussian_sensitivity(plant, &cd)?;
    let ratio = kappa_inverse(params.epsilon0, params.delta2)?;
    Ok(UnstableDesign {
        n_star: cd.n_star,
        schedule,
        sigma: sensitivity * params.zeta / ratio,
        epsilon0: params.epsilon0,
        delta1: params.delta1,
        delta2: params.delta2,
        sensitivity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::from_rows;
    use crate::scenario;

    #[test]
    fn kappa_examples() {
        assert_eq!(kappa(0.3, 0.0), 0.0);
        assert_eq!(kappa(0.0, 0.0), 0.0);
        // 2Φ(1) - 1
        assert!((kappa(0.0, 2.0) - 0.682_689_492_137_085_9).abs() < 1e-14);
        // value from an independent normal-CDF implementation
        assert!((kappa(0.3, 0.449_444_101_084_884_6) - 0.077_704_558_632_881_67).abs() < 1e-12);
    }

    #[test]
    fn kappa_range_and_monotonicity() {
        for &eps in &[0.0, 0.1, 0.3, 1.0, 3.0, 10.0] {
            let mut prev = 0.0;
            for i in 1..400 {
                let s = f64::from(i) * 0.05;
                let v = kappa(eps, s);
                assert!((0.0..=1.0).contains(&v));
                assert!(v >= prev);
                prev = v;
                assert!(kappa(eps + 0.5, s) <= v);
            }
        }
        assert!(kappa(0.3, 1.0) < kappa(0.3, 1.0 + 1e-6));
    }

    #[test]
    fn kappa_inverse_examples() {
        let s = kappa_inverse(0.0, 0.682_689_492_137_085_9).unwrap();
        assert!((s - 2.0).abs() < 1e-9);
        let tiny = kappa_inverse(0.0, 1e-6).unwrap();
        assert!(tiny > 0.0 && tiny < 1e-5);
        assert!((kappa(0.0, tiny) - 1e-6).abs() <= 1e-10);
        assert!(kappa_inverse(0.3, 0.0).is_err());
        assert!(kappa_inverse(0.3, 1.0).is_err());
    }

    #[test]
    fn kappa_roundtrip_grid() {
        for &eps in &[0.0, 0.3, 1.0, 3.0] {
            for &delta in &[0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5] {
                let s = kappa_inverse(eps, delta).unwrap();
                assert!((kappa(eps, s) - delta).abs() <= 1e-10, "eps {eps} delta {delta}");
            }
        }
    }

    #[test]
    fn unstable_design_reference_plant() {
        let s = scenario::tracking_scenario();
        let est = ContractionEstimate::given(1.0, 1.0);
        let sigma_ref = 5f64.sqrt();
        let cd = controllability_data(&s.plant).unwrap();
        let sens = gaussian_sensitivity(&s.plant, &cd).unwrap();
        assert!((sens - 101f64.sqrt()).abs() < 1e-10);
        let delta2 = implied_delta2(sens, 0.1, 0.3, sigma_ref);
        assert!((delta2 - 0.077_704_558_632_881_67).abs() < 1e-10);

        let params = UnstableParams { zeta: 0.1, epsilon0: 0.3, delta1: 0.05, delta2, q: 1.0, d_star: None };
        let design = design_unstable_mechanism(&s.plant, &est, &params).unwrap();
        assert_eq!(design.n_star, 2);
        assert!((design.schedule.d0() - 4.0).abs() < 1e-12);
        assert!(design.schedule.is_static());
        assert!((design.sigma - sigma_ref).abs() < 1e-8);
        assert!((design.total_delta() - (0.05 + delta2)).abs() < 1e-15);

        let params = UnstableParams { q: 0.99, ..params };
        let design = design_unstable_mechanism(&s.plant, &est, &params).unwrap();
        assert!((design.schedule.d0() - 0.1 * (1.0 + 1.0 / 0.99) / 0.05).abs() < 1e-12);
        assert_eq!(design.schedule.d_star(), 0.0);
    }

    #[test]
    fn unstable_design_single_step() {
        let plant = LtiPlant::new(from_rows(&[&[2.0]]), from_rows(&[&[0.5]]), from_rows(&[&[3.0]]), from_rows(&[&[1.0]])).unwrap();
        let est = ContractionEstimate::given(1.0, 2.1);
        let params = UnstableParams { zeta: 0.2, epsilon0: 1.0, delta1: 0.1, delta2: 0.1, q: 1.0, d_star: None };
        let design = design_unstable_mechanism(&plant, &est, &params).unwrap();
        assert_eq!(design.n_star, 1);
        assert!((design.schedule.d0() - 3.0 * 0.2 / 0.1).abs() < 1e-12);
        // |Δ^{-1/2} A| = 2 / 0.5
        assert!((design.sensitivity - 4.0).abs() < 1e-12);
    }

    #[test]
    fn unstable_design_rejects_structure() {
        // n* = 2 but C B != 0
        let plant = LtiPlant::new(
            from_rows(&[&[1.0, 1.0], &[0.0, 1.0]]),
            from_rows(&[&[1.0], &[1.0]]),
            from_rows(&[&[1.0, 0.0]]),
            from_rows(&[&[1.0, 0.0]]),
        )
        .unwrap();
        let params = UnstableParams { zeta: 0.1, epsilon0: 0.3, delta1: 0.05, delta2: 0.05, q: 1.0, d_star: None };
        let err = design_unstable_mechanism(&plant, &ContractionEstimate::given(1.0, 1.05), &params);
        assert!(matches!(err, Err(Error::UnsupportedStructure(_))));

        let plant = LtiPlant::new(from_rows(&[&[2.0]]), from_rows(&[&[0.0]]), from_rows(&[&[1.0]]), from_rows(&[&[1.0]])).unwrap();
        let err = design_unstable_mechanism(&plant, &ContractionEstimate::given(1.0, 2.1), &params);
        assert_eq!(err, Err(Error::Uncontrollable));
    }
}
