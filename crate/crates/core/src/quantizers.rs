//! Uniform deterministic, static stochastic and zoom-in dynamic stochastic
//! quantizers.
//!
//! A stochastic quantizer with step `d` writes `y = z + n d` with
//! `z ∈ (0, d]` and outputs `n d` with probability `1 - z/d` or `(n + 1) d`
//! with probability `z/d`. Exact multiples of `d` take `z = d` and therefore
//! map to themselves with probability one.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Inputs within this absolute distance of a grid point are treated as
/// grid-aligned.
pub const GRID_SNAP: f64 = 1e-12;

/// Step-size schedule `d(k) = d* + (d0 - d*) q^k`.
///
/// `q = 1` is the static quantizer and requires `d* = d0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSchedule {
    d0: f64,
    d_star: f64,
    q: f64,
}

impl StepSchedule {
    pub fn new(d0: f64, d_star: f64, q: f64) -> Result<Self> {
        if !(d0.is_finite() && d0 > 0.0) {
            return Err(Error::InvalidInput(format!("d0 must be positive, got {d0}")));
        }
        if !(d_star >= 0.0 && d_star <= d0) {
            return Err(Error::InvalidInput(format!("d* must lie in [0, d0], got {d_star}")));
        }
        if !(q > 0.0 && q <= 1.0) {
            return Err(Error::InvalidInput(format!("q must lie in (0, 1], got {q}")));
        }
        if q == 1.0 && d_star != d0 {
            return Err(Error::InvalidInput("q = 1 (static quantizer) requires d* = d0".into()));
        }
        Ok(Self { d0, d_star, q })
    }

    pub fn fixed(d: f64) -> Result<Self> {
        Self::new(d, d, 1.0)
    }

    pub fn d0(&self) -> f64 {
        self.d0
    }

    pub fn d_star(&self) -> f64 {
        self.d_star
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn is_static(&self) -> bool {
        self.q == 1.0
    }

    pub fn step_at(&self, k: usize) -> f64 {
        if self.is_static() {
            return self.d0;
        }
        let decay = self.q.powi(i32::try_from(k).unwrap_or(i32::MAX));
        self.d_star + (self.d0 - self.d_star) * decay
    }

    /// Checks `(d0 - d*) q^k <= d(k) - d* <= d0 - d*` at step `k`.
    pub fn within_decay_envelope(&self, k: usize) -> bool {
        let excess = self.step_at(k) - self.d_star;
        let span = self.d0 - self.d_star;
        let floor = span * self.q.powi(i32::try_from(k).unwrap_or(i32::MAX));
        let slack = 1e-12 * span.max(1.0);
        excess >= floor - slack && excess <= span + slack
    }
}

/// Output law of the stochastic quantizer at one input: mass `1 - p_hi` on
/// `cell * d` and `p_hi` on `(cell + 1) * d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPointPmf {
    pub cell: i64,
    pub lo_value: f64,
    pub hi_value: f64,
    pub p_hi: f64,
}

impl TwoPointPmf {
    pub fn p_lo(&self) -> f64 {
        1.0 - self.p_hi
    }

    pub fn mean(&self) -> f64 {
        self.lo_value * self.p_lo() + self.hi_value * self.p_hi
    }

    pub fn variance(&self) -> f64 {
        let step = self.hi_value - self.lo_value;
        self.p_hi * self.p_lo() * step * step
    }

    /// Probability of the grid point with index `n` (value `n d`).
    pub fn mass_at_cell(&self, n: i64) -> f64 {
        if n == self.cell {
            self.p_lo()
        } else if Some(n) == self.cell.checked_add(1) {
            self.p_hi
        } else {
            0.0
        }
    }

    /// Atoms with positive mass as `(grid index, value, probability)`.
    pub fn atoms(&self) -> impl Iterator<Item = (i64, f64, f64)> {
        [
            (self.cell, self.lo_value, self.p_lo()),
            (self.cell.saturating_add(1), self.hi_value, self.p_hi),
        ]
        .into_iter()
        .filter(|&(_, _, p)| p > 0.0)
    }
}

fn check_step(d: f64) {
    debug_assert!(d > 0.0 && d.is_finite(), "quantizer step must be positive, got {d}");
}

/// Exact output distribution of the stochastic quantizer.
pub fn output_pmf(y: f64, d: f64) -> TwoPointPmf {
    check_step(d);
    let r = y / d;
    let nearest = r.round();
    if (y - nearest * d).abs() <= GRID_SNAP || !(r.abs() < 4.5e15) {
        // grid-aligned: z = d, all mass on the upper point
        let cell = (nearest as i64).saturating_sub(1);
        return TwoPointPmf { cell, lo_value: (cell as f64) * d, hi_value: nearest * d, p_hi: 1.0 };
    }
    let n = r.ceil() - 1.0;
    let lo_value = n * d;
    let p_hi = ((y - lo_value) / d).clamp(0.0, 1.0);
    TwoPointPmf { cell: n as i64, lo_value, hi_value: (n + 1.0) * d, p_hi }
}

/// Mid-tread uniform quantizer: `n d` for `y ∈ (n d - d/2, n d + d/2]`.
pub fn quantize_deterministic(y: f64, d: f64) -> f64 {
    check_step(d);
    (y / d - 0.5).ceil() * d
}

/// Inverse-CDF draw from [`output_pmf`] given a uniform variate in `[0, 1)`.
pub fn quantize_with_uniform(y: f64, d: f64, u: f64) -> f64 {
    let pmf = output_pmf(y, d);
    if u < pmf.p_hi {
        pmf.hi_value
    } else {
        pmf.lo_value
    }
}

pub fn quantize_stochastic<R: Rng + ?Sized>(y: f64, d: f64, rng: &mut R) -> f64 {
    quantize_with_uniform(y, d, rng.random::<f64>())
}

/// Componentwise independent stochastic quantization.
pub fn quantize_vector<R: Rng + ?Sized>(y: &[f64], d: f64, rng: &mut R) -> Vec<f64> {
    y.iter().map(|&v| quantize_stochastic(v, d, rng)).collect()
}

/// Exact total variation distance between two quantizer laws sharing a step.
pub fn total_variation(a: &TwoPointPmf, b: &TwoPointPmf) -> f64 {
    if a.cell.abs_diff(b.cell) > 2 {
        return 1.0;
    }
    let lo = a.cell.min(b.cell);
    let hi = a.cell.max(b.cell) + 1;
    0.5 * (lo..=hi).map(|n| (a.mass_at_cell(n) - b.mass_at_cell(n)).abs()).sum::<f64>()
}

/// Words reserved per (run, step) in a substream.
const WORDS_PER_STEP_SHIFT: u32 = 20;

/// Independent random substream for one (run, step) pair.
///
/// The master seed fixes the ChaCha key, the run id selects the stream and the
/// step selects a disjoint block of the keystream, so draws do not depend on
/// the order in which runs or steps are evaluated. Within a step, callers
/// consume variates in component order.
pub fn substream(master_seed: u64, run: u64, step: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(run);
    rng.set_word_pos(u128::from(step) << WORDS_PER_STEP_SHIFT);
    rng
}
