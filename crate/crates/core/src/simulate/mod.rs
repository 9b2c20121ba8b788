//! Closed-loop simulation of plant, exo-system, fusion center and quantizer.

mod cost;
mod moments;

pub use cost::{estimate_tracking_cost, run_cost, simulate_cost_ensemble, tracking_cost_bound, CostBound};
pub use moments::{error_correlation, quantization_error_moments, CorrelationReport, MomentReport};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::plant::{ExoSystem, FusionCenterGains, LtiPlant};
use crate::quantizers::{quantize_deterministic, quantize_with_uniform, substream, StepSchedule};
use crate::scenario::Scenario;

/// States beyond this magnitude abort the run.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuantizerKind {
    /// `v = y`.
    Identity,
    Deterministic,
    Stochastic,
}

/// Gaussian input noise with standard deviation `sigma` for `k < cutoff`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisePolicy {
    pub sigma: f64,
    pub cutoff: usize,
}

impl NoisePolicy {
    pub const NONE: Self = Self { sigma: 0.0, cutoff: 0 };

    pub fn new(sigma: f64, cutoff: usize) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidInput(format!("noise sigma must be nonnegative, got {sigma}")));
        }
        Ok(Self { sigma, cutoff })
    }

    fn active(&self, k: usize) -> bool {
        k < self.cutoff && self.sigma > 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub plant: LtiPlant,
    pub exo: ExoSystem,
    pub gains: FusionCenterGains,
    pub quantizer: QuantizerKind,
    pub schedule: StepSchedule,
    pub noise: NoisePolicy,
    pub x0: Vector,
    pub x_hat0: Vector,
    pub x_r0: Vector,
    /// Number of state updates; records cover `k = 0..=horizon`.
    pub horizon: usize,
    pub seed: u64,
}

impl SimulationConfig {
    pub fn from_scenario(
        s: &Scenario,
        quantizer: QuantizerKind,
        schedule: StepSchedule,
        noise: NoisePolicy,
        horizon: usize,
        seed: u64,
    ) -> Self {
        Self {
            plant: s.plant.clone(),
            exo: s.exo.clone(),
            gains: s.gains.clone(),
            quantizer,
            schedule,
            noise,
            x0: s.x0.clone(),
            x_hat0: s.x_hat0.clone(),
            x_r0: s.x_r0.clone(),
            horizon,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.exo.check_against(&self.plant)?;
        FusionCenterGains::new(&self.plant, &self.exo, self.gains.l.clone(), self.gains.k_x.clone(), self.gains.k_r.clone())?;
        let n = self.plant.n_states();
        if self.x0.len() != n || self.x_hat0.len() != n {
            return Err(Error::Dimension(format!("x0 and x_hat0 must have length {n}")));
        }
        if self.x_r0.len() != self.exo.n_states() {
            return Err(Error::Dimension(format!("x_r0 must have length {}", self.exo.n_states())));
        }
        if self.x0.iter().chain(self.x_hat0.iter()).chain(self.x_r0.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("initial state"));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidInput("horizon must be at least 1".into()));
        }
        NoisePolicy::new(self.noise.sigma, self.noise.cutoff)?;
        Ok(())
    }
}

/// Signals at one time step. `w` is the input noise applied to the plant; it
/// is not part of the published input `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub k: usize,
    pub x: Vector,
    pub x_hat: Vector,
    pub x_r: Vector,
    pub y: Vector,
    pub v: Vector,
    pub u: Vector,
    pub w: Vector,
    pub e_y: Vector,
    /// Quantizer step in force; zero means no quantization.
    pub d_k: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub run: u64,
    pub records: Vec<StepRecord>,
}

impl Trajectory {
    /// Largest `|e_y(k)|_∞` over the last `fraction` of the records.
    pub fn tail_max_abs_ey(&self, fraction: f64) -> f64 {
        let len = self.records.len();
        let tail = ((len as f64 * fraction).ceil() as usize).clamp(1, len);
        self.records[len - tail..].iter().map(|r| r.e_y.amax()).fold(0.0, f64::max)
    }
}

/// Drives one run and hands every record to `visit` before advancing.
fn run_loop(cfg: &SimulationConfig, run: u64, mut visit: impl FnMut(StepRecord)) -> Result<()> {
    let SimulationConfig { plant, exo, gains, .. } = cfg;
    let (p, m) = (plant.n_outputs(), plant.n_inputs());
    let mut x = cfg.x0.clone();
    let mut x_hat = cfg.x_hat0.clone();
    let mut x_r = cfg.x_r0.clone();

    for k in 0..=cfg.horizon {
        let y = &plant.c * &x;
        let d_k = match cfg.quantizer {
            QuantizerKind::Identity => 0.0,
            _ => cfg.schedule.step_at(k),
        };
        let needs_rng = (cfg.quantizer == QuantizerKind::Stochastic && d_k > 0.0) || cfg.noise.active(k);
        let mut rng = needs_rng.then(|| substream(cfg.seed, run, k as u64));

        let v = match (cfg.quantizer, &mut rng) {
            _ if d_k == 0.0 => y.clone(),
            (QuantizerKind::Deterministic, _) => y.map(|yi| quantize_deterministic(yi, d_k)),
            (QuantizerKind::Stochastic, Some(rng)) => {
                Vector::from_iterator(p, y.iter().map(|&yi| quantize_with_uniform(yi, d_k, rng.random::<f64>())))
            }
            _ => y.clone(),
        };
        let u = &gains.k_x * &x_hat + &gains.k_r * &x_r;
        let w = match &mut rng {
            Some(rng) if cfg.noise.active(k) => {
                Vector::from_iterator(m, (0..m).map(|_| cfg.noise.sigma * rng.sample::<f64, _>(StandardNormal)))
            }
            _ => Vector::zeros(m),
        };
        let e_y = &plant.h_p * &x - &exo.h_r * &x_r;

        let next_x = &plant.a * &x + &plant.b * (&u + &w);
        let next_x_hat = &plant.a * &x_hat + &plant.b * &u + &gains.l * (&plant.c * &x_hat - &v);
        let next_x_r = &exo.a_r * &x_r;

        visit(StepRecord { k, x, x_hat, x_r, y, v, u, w, e_y, d_k });
        if k == cfg.horizon {
            break;
        }
        let bad = |s: &Vector| s.iter().any(|v| !(v.abs() <= DIVERGENCE_LIMIT));
        if bad(&next_x) || bad(&next_x_hat) || bad(&next_x_r) {
            return Err(Error::Divergence { step: k + 1 });
        }
        x = next_x;
        x_hat = next_x_hat;
        x_r = next_x_r;
    }
    Ok(())
}

/// Simulates run `run` of the configuration. Randomness comes from the
/// `(seed, run, k)` substreams, so runs are reproducible and independent of
/// scheduling.
pub fn simulate_closed_loop(cfg: &SimulationConfig, run: u64) -> Result<Trajectory> {
    cfg.validate()?;
    let mut records = Vec::with_capacity(cfg.horizon + 1);
    run_loop(cfg, run, |r| records.push(r))?;
    Ok(Trajectory { run, records })
}

/// Runs `0..runs` in parallel, returned in run order.
pub fn simulate_ensemble(cfg: &SimulationConfig, runs: usize) -> Result<Vec<Trajectory>> {
    cfg.validate()?;
    (0..runs as u64).into_par_iter().map(|run| simulate_closed_loop(cfg, run)).collect()
}
