use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

pub const DEFAULT_MARGIN: f64 = 0.05;
pub const DEFAULT_K_MAX: usize = 2000;

/// Lower limit on `λ` so that nilpotent or nearly nilpotent matrices still get
/// a usable (finite `β`) certificate.
const LAMBDA_FLOOR: f64 = 1e-2;
/// Spectral radii at or above `1 - MARGINAL_TOL` are treated as marginal.
const MARGINAL_TOL: f64 = 1e-9;

/// Certificate `|A^k|₁ <= β λ^k` for `0 <= k <= k_max_checked`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionEstimate {
    pub beta: f64,
    pub lambda: f64,
    pub k_max_checked: usize,
}

impl ContractionEstimate {
    /// Constants supplied directly (e.g. known analytically); nothing is
    /// checked until [`ContractionEstimate::verify`] is called.
    pub fn given(beta: f64, lambda: f64) -> Self {
        Self { beta, lambda, k_max_checked: 0 }
    }

    /// Re-checks the certificate against `a` for `k <= k_max`.
    pub fn verify(&self, a: &Matrix, k_max: usize) -> bool {
        let scaled = a / self.lambda;
        let mut p = Matrix::identity(a.nrows(), a.ncols());
        for _ in 0..=k_max {
            match linalg::induced_norm_1(&p) {
                Ok(r) if r <= self.beta * (1.0 + 1e-9) => {}
                _ => return false,
            }
            p = &p * &scaled;
        }
        true
    }
}

/// `|(a / scale)^k|₁` for `k = 0..=k_max`, stopping early on overflow.
fn scaled_power_norms(a: &Matrix, scale: f64, k_max: usize) -> Vec<f64> {
    let scaled = a / scale;
    let mut p = Matrix::identity(a.nrows(), a.ncols());
    let mut out = Vec::with_capacity(k_max + 1);
    for _ in 0..=k_max {
        let r = linalg::induced_norm_1(&p).unwrap_or(f64::INFINITY);
        out.push(r);
        if !r.is_finite() {
            break;
        }
        p = &p * &scaled;
    }
    out
}

fn max_of(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(0.0, f64::max)
}

/// The tail of the sweep no longer exceeds the earlier maximum.
fn has_peaked(ratios: &[f64], k_max: usize, rel_tol: f64) -> bool {
    if ratios.len() != k_max + 1 || ratios.iter().any(|r| !r.is_finite()) {
        return false;
    }
    let split = (3 * (k_max + 1)) / 4;
    let split = split.clamp(1, k_max);
    max_of(&ratios[split..]) <= max_of(&ratios[..split]) * (1.0 + rel_tol)
}

/// Estimates `β, λ` with `|A^k|₁ <= β λ^k`.
///
/// `λ` is the spectral radius inflated by `margin` (floored at 0.01), and `β`
/// the largest ratio `|A^k|₁ / λ^k` seen over `k <= k_max`. When the spectral
/// radius is on the unit circle but the powers of `A` stay bounded, the
/// certificate uses `λ = 1` with no margin.
pub fn estimate_beta_lambda(a: &Matrix, margin: f64, k_max: usize) -> Result<ContractionEstimate> {
    if !(margin >= 0.0 && margin.is_finite()) {
        return Err(Error::InvalidInput(format!("margin must be nonnegative, got {margin}")));
    }
    if k_max == 0 {
        return Err(Error::InvalidInput("k_max must be at least 1".into()));
    }
    let rho = linalg::spectral_radius(a)?;

    if (1.0 - MARGINAL_TOL..=1.0 + MARGINAL_TOL).contains(&rho) {
        let norms = scaled_power_norms(a, 1.0, k_max);
        if has_peaked(&norms, k_max, 1e-6) {
            let est = ContractionEstimate { beta: max_of(&norms), lambda: 1.0, k_max_checked: k_max };
            return Ok(est);
        }
    }

    let lambda = (rho * (1.0 + margin)).max(LAMBDA_FLOOR);
    let ratios = scaled_power_norms(a, lambda, k_max);
    if !has_peaked(&ratios, k_max, 1e-9) {
        return Err(Error::EstimateNotConverged { k_max });
    }
    Ok(ContractionEstimate { beta: max_of(&ratios), lambda, k_max_checked: k_max })
}
