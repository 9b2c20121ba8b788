//! Exact hockey-stick divergence between two quantized output stacks.
//!
//! Each stack component is quantized independently, so the joint law is a
//! product of two-point laws and can be enumerated atom by atom.

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::plant::{input_toeplitz, observability_stack, LtiPlant};
use crate::quantizers::{output_pmf, StepSchedule, TwoPointPmf};

/// Maximum number of stack components the auditor will enumerate.
pub const AUDIT_COMPONENT_LIMIT: usize = 20;

/// Neumaier-compensated running sum.
#[derive(Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

fn enumerate(
    laws: &[TwoPointPmf],
    laws_prime: &[TwoPointPmf],
    p: f64,
    p_prime: f64,
    scale: f64,
    acc: &mut CompensatedSum,
) {
    let Some((law, rest)) = laws.split_first() else {
        acc.add((p - scale * p_prime).max(0.0));
        return;
    };
    let (law_prime, rest_prime) = laws_prime.split_first().expect("equal lengths");
    for (cell, _, mass) in law.atoms() {
        enumerate(rest, rest_prime, p * mass, p_prime * law_prime.mass_at_cell(cell), scale, acc);
    }
}

/// `sup_S P(S) - e^ε P'(S)` for the quantized stacks of `y` and `y_prime`,
/// with `steps[i]` the quantizer step applied to component `i`.
///
/// Only atoms charged by `P` contribute, so at most `2^len` atoms are visited.
/// With `epsilon = 0` this is the total variation distance.
pub fn audit_zero_eps(y: &[f64], y_prime: &[f64], steps: &[f64], epsilon: f64) -> Result<f64> {
    if y.len() != y_prime.len() || y.len() != steps.len() {
        return Err(Error::Dimension(format!(
            "stack lengths differ: {}, {}, {} steps",
            y.len(),
            y_prime.len(),
            steps.len()
        )));
    }
    if y.len() > AUDIT_COMPONENT_LIMIT {
        return Err(Error::EnumerationLimit { components: y.len(), limit: AUDIT_COMPONENT_LIMIT });
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidInput(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    if let Some(d) = steps.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
        return Err(Error::InvalidInput(format!("quantizer steps must be positive, got {d}")));
    }
    if y.iter().chain(y_prime).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("audited output stack"));
    }

    let laws: Vec<_> = y.iter().zip(steps).map(|(&v, &d)| output_pmf(v, d)).collect();
    let laws_prime: Vec<_> = y_prime.iter().zip(steps).map(|(&v, &d)| output_pmf(v, d)).collect();
    let mut acc = CompensatedSum::default();
    enumerate(&laws, &laws_prime, 1.0, 1.0, epsilon.exp(), &mut acc);
    Ok(acc.value().clamp(0.0, 1.0))
}

/// Audits the mechanism `V_k = Q(O_k x₀ + N_k U_k)` for two initial states
/// sharing the public input stack `inputs` (length `(k + 1) m`).
pub fn audit_mechanism(
    plant: &LtiPlant,
    x0: &Vector,
    x0_prime: &Vector,
    inputs: &Vector,
    schedule: &StepSchedule,
    k: usize,
    epsilon: f64,
) -> Result<f64> {
    let (n, m, p) = (plant.n_states(), plant.n_inputs(), plant.n_outputs());
    if x0.len() != n || x0_prime.len() != n {
        return Err(Error::Dimension(format!("initial states must have length {n}")));
    }
    if inputs.len() != (k + 1) * m {
        return Err(Error::Dimension(format!("input stack must have length {}", (k + 1) * m)));
    }
    let components = (k + 1) * p;
    if components > AUDIT_COMPONENT_LIMIT {
        return Err(Error::EnumerationLimit { components, limit: AUDIT_COMPONENT_LIMIT });
    }
    let obs = observability_stack(plant, k);
    let forced = input_toeplitz(plant, k) * inputs;
    let y = &obs * x0 + &forced;
    let y_prime = &obs * x0_prime + &forced;
    let steps: Vec<f64> = (0..=k).flat_map(|t| std::iter::repeat(schedule.step_at(t)).take(p)).collect();
    audit_zero_eps(y.as_slice(), y_prime.as_slice(), &steps, epsilon)
}
