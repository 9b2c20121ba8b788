//! Empirical checks on the quantization error `w_v = v - y`.

use crate::quantizers::output_pmf;

/// Minimum sample count for the four-standard-error tests to be meaningful.
pub const MIN_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub samples: usize,
    pub mean: f64,
    pub mean_std_err: f64,
    pub second_moment: f64,
    pub second_moment_std_err: f64,
    /// Exact `E[w_v²] = z (d - z)`.
    pub expected_second_moment: f64,
    pub mean_ok: bool,
    pub second_moment_ok: bool,
    pub enough_samples: bool,
}

impl MomentReport {
    pub fn passed(&self) -> bool {
        self.mean_ok && self.second_moment_ok && self.enough_samples
    }
}

fn mean_and_sd(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64, usize) {
    let n = xs.clone().count();
    let mean = xs.clone().sum::<f64>() / n as f64;
    let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n.max(2) - 1) as f64;
    (mean, var.sqrt(), n)
}

/// Compares quantizer outputs `samples` of input `y` at step `d` against the
/// zero mean and exact variance of the quantization error.
pub fn quantization_error_moments(y: f64, d: f64, samples: &[f64]) -> MomentReport {
    let errors = samples.iter().map(|v| v - y);
    let (mean, sd, n) = mean_and_sd(errors.clone());
    let (second, sd2, _) = mean_and_sd(errors.map(|e| e * e));
    let root_n = (n as f64).sqrt();
    let (mean_se, second_se) = (sd / root_n, sd2 / root_n);
    let expected = output_pmf(y, d).variance();
    // exact zero when the error is degenerate
    let within = |x: f64, target: f64, se: f64| (x - target).abs() <= 4.0 * se + 1e-12 * (1.0 + target.abs());
    MomentReport {
        samples: n,
        mean,
        mean_std_err: mean_se,
        second_moment: second,
        second_moment_std_err: second_se,
        expected_second_moment: expected,
        mean_ok: within(mean, 0.0, mean_se),
        second_moment_ok: within(second, expected, second_se),
        enough_samples: n >= MIN_SAMPLES,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    pub samples: usize,
    pub correlation: f64,
    /// `4 / √N`.
    pub tolerance: f64,
    pub ok: bool,
}

/// Sample correlation of paired quantization errors at two time steps.
pub fn error_correlation(a: &[f64], b: &[f64]) -> CorrelationReport {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let (ma, sa, _) = mean_and_sd(a.iter().copied());
    let (mb, sb, _) = mean_and_sd(b.iter().copied());
    let cov = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (n.max(2) - 1) as f64;
    let correlation = if sa > 0.0 && sb > 0.0 { cov / (sa * sb) } else { 0.0 };
    let tolerance = 4.0 / (n as f64).sqrt();
    CorrelationReport { samples: n, correlation, tolerance, ok: correlation.abs() <= tolerance }
}
