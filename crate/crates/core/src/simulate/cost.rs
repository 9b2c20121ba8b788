//! Tracking cost `lim E[e_yᵀ Q e_y]`: Monte Carlo estimate and analytic bound.

use rayon::prelude::*;

use super::{run_loop, SimulationConfig, Trajectory};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::plant::{closed_loop_matrix, gain_kr, solve_regulator_equations, ExoSystem, FusionCenterGains, LtiPlant};

const KR_TOL: f64 = 1e-8;
const SYMMETRY_TOL: f64 = 1e-12;

fn check_weight(q: &Matrix, dim: usize) -> Result<()> {
    if q.shape() != (dim, dim) {
        return Err(Error::Dimension(format!("Q must be {dim}x{dim}, got {:?}", q.shape())));
    }
    linalg::ensure_finite(q, "Q")?;
    if (q - q.transpose()).amax() > SYMMETRY_TOL * (1.0 + q.amax()) {
        return Err(Error::InvalidInput("Q must be symmetric".into()));
    }
    let min = q.clone().symmetric_eigenvalues().min();
    if min < -1e-12 * (1.0 + q.amax()) {
        return Err(Error::InvalidInput(format!("Q must be positive semidefinite (min eigenvalue {min})")));
    }
    Ok(())
}

fn check_window(horizon: usize, burn_in: usize, window: usize) -> Result<()> {
    if window == 0 {
        return Err(Error::Config("cost window must be nonempty".into()));
    }
    if burn_in + window > horizon + 1 {
        return Err(Error::Config(format!(
            "burn_in + window = {} exceeds the {} recorded steps",
            burn_in + window,
            horizon + 1
        )));
    }
    Ok(())
}

fn quadratic(e: &Vector, q: &Matrix) -> f64 {
    e.dot(&(q * e))
}

fn mean_and_std_err(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Mean of `e_yᵀ Q e_y` over records `burn_in..burn_in + window` of each run,
/// then across runs. Returns the mean and its standard error across runs.
pub fn estimate_tracking_cost(trajectories: &[Trajectory], q: &Matrix, burn_in: usize, window: usize) -> Result<(f64, f64)> {
    let first = trajectories.first().ok_or_else(|| Error::Config("ensemble is empty".into()))?;
    let dim = first.records.first().map_or(0, |r| r.e_y.len());
    check_weight(q, dim)?;
    let mut per_run = Vec::with_capacity(trajectories.len());
    for t in trajectories {
        check_window(t.records.len().saturating_sub(1), burn_in, window)?;
        let sum: f64 = t.records[burn_in..burn_in + window].iter().map(|r| quadratic(&r.e_y, q)).sum();
        per_run.push(sum / window as f64);
    }
    Ok(mean_and_std_err(&per_run))
}

/// Window-averaged cost of a single run, without storing the trajectory.
pub fn run_cost(cfg: &SimulationConfig, run: u64, q: &Matrix, burn_in: usize, window: usize) -> Result<f64> {
    cfg.validate()?;
    check_weight(q, cfg.plant.n_tracked())?;
    check_window(cfg.horizon, burn_in, window)?;
    let mut sum = 0.0;
    run_loop(cfg, run, |r| {
        if (burn_in..burn_in + window).contains(&r.k) {
            sum += quadratic(&r.e_y, q);
        }
    })?;
    Ok(sum / window as f64)
}

/// [`estimate_tracking_cost`] over runs `0..runs`, streamed and parallel.
pub fn simulate_cost_ensemble(cfg: &SimulationConfig, runs: usize, q: &Matrix, burn_in: usize, window: usize) -> Result<(f64, f64)> {
    if runs == 0 {
        return Err(Error::Config("ensemble is empty".into()));
    }
    let per_run: Vec<f64> =
        (0..runs as u64).into_par_iter().map(|run| run_cost(cfg, run, q, burn_in, window)).collect::<Result<_>>()?;
    Ok(mean_and_std_err(&per_run))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostBound {
    pub bound: f64,
    /// `trace(Z)` with `Z = 𝒜 Z 𝒜ᵀ + [I; I] L Lᵀ [I; I]ᵀ`.
    pub trace_z: f64,
    pub trace_hqh: f64,
    pub z: Matrix,
}

/// `J <= (d²/2) trace(H_pᵀ Q H_p) trace(Z)` for a static step `d`.
///
/// Requires a Schur-stable closed loop and `K_r = U - K_x X` from the
/// regulator equations.
pub fn tracking_cost_bound(
    plant: &LtiPlant,
    exo: &ExoSystem,
    gains: &FusionCenterGains,
    q: &Matrix,
    d: f64,
) -> Result<CostBound> {
    if !(d >= 0.0 && d.is_finite()) {
        return Err(Error::InvalidInput(format!("step must be nonnegative, got {d}")));
    }
    check_weight(q, plant.n_tracked())?;
    let cl = closed_loop_matrix(plant, gains)?;
    let rho = linalg::spectral_radius(&cl)?;
    if !(rho < 1.0) {
        return Err(Error::HypothesisViolated(format!(
            "closed loop is not Schur stable (spectral radius {rho})"
        )));
    }
    let sol = solve_regulator_equations(plant, exo).map_err(|e| match e {
        Error::Infeasible { residual } => {
            Error::HypothesisViolated(format!("regulator equations have no solution (residual {residual:e})"))
        }
        other => other,
    })?;
    let kr = gain_kr(&gains.k_x, &sol)?;
    let mismatch = (&kr - &gains.k_r).amax();
    if mismatch > KR_TOL {
        return Err(Error::HypothesisViolated(format!(
            "K_r differs from U - K_x X by {mismatch:e}"
        )));
    }

    let n = plant.n_states();
    let mut stacked = Matrix::zeros(2 * n, plant.n_outputs());
    stacked.rows_mut(0, n).copy_from(&gains.l);
    stacked.rows_mut(n, n).copy_from(&gains.l);
    let w = &stacked * stacked.transpose();
    let z = linalg::solve_discrete_lyapunov(&cl, &w)?;
    let trace_z = z.trace();
    let trace_hqh = (plant.h_p.transpose() * q * &plant.h_p).trace();
    Ok(CostBound { bound: 0.5 * d * d * trace_hqh * trace_z, trace_z, trace_hqh, z })
}
