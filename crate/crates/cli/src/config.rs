//! Scenario files: TOML with fixed section and key names.

use std::path::Path;

use serde::Deserialize;
use stoq_core::plant::{gain_kr, solve_regulator_equations};
use stoq_core::privacy::Horizon;
use stoq_core::simulate::{NoisePolicy, QuantizerKind, SimulationConfig};
use stoq_core::{ExoSystem, FusionCenterGains, LtiPlant, Matrix, StepSchedule, Vector};

use crate::error::CliError;

type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub plant: PlantSection,
    pub exo: ExoSection,
    pub gains: GainsSection,
    pub quantizer: QuantizerSection,
    #[serde(default)]
    pub noise: NoiseSection,
    pub privacy: Option<PrivacySection>,
    #[serde(default)]
    pub sim: SimSection,
    pub initial: InitialSection,
    pub audit: Option<AuditSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSection {
    pub a: Rows,
    pub b: Rows,
    pub c: Rows,
    pub h_p: Rows,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExoSection {
    pub a_r: Rows,
    pub h_r: Rows,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsSection {
    pub l: Rows,
    pub k_x: Rows,
    /// Derived from the regulator equations when absent.
    pub k_r: Option<Rows>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuantizerChoice {
    Deterministic,
    Static,
    Dynamic,
    Identity,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantizerSection {
    pub kind: QuantizerChoice,
    pub d0: Option<f64>,
    pub d_star: Option<f64>,
    pub q: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default)]
    pub sigma: f64,
    #[serde(default)]
    pub cutoff: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrivacySection {
    pub zeta: f64,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub epsilon0: Option<f64>,
    pub delta1: Option<f64>,
    pub delta2: Option<f64>,
    /// Last protected time step; omitted means every time step.
    pub horizon: Option<usize>,
}

impl PrivacySection {
    pub fn horizon(&self) -> Horizon {
        self.horizon.map_or(Horizon::Infinite, Horizon::Finite)
    }

    pub fn has_split_budget(&self) -> bool {
        self.epsilon0.is_some() || self.delta1.is_some() || self.delta2.is_some()
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_runs")]
    pub runs: usize,
    pub burn_in: Option<usize>,
    pub window: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    /// Cost weight `Q`; identity when absent.
    pub q_weight: Option<Rows>,
}

fn default_horizon() -> usize {
    1000
}

fn default_runs() -> usize {
    100
}

impl Default for SimSection {
    fn default() -> Self {
        Self { horizon: default_horizon(), runs: default_runs(), burn_in: None, window: None, seed: 0, q_weight: None }
    }
}

impl SimSection {
    /// Defaults to the second half of the horizon.
    pub fn burn_in(&self) -> usize {
        self.burn_in.unwrap_or(self.horizon / 2)
    }

    pub fn window(&self) -> usize {
        self.window.unwrap_or((self.horizon + 1).saturating_sub(self.burn_in()))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub x0: Vec<f64>,
    pub x_hat0: Vec<f64>,
    pub x_r0: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditSection {
    /// Neighbouring initial state; defaults to `x0 + ζ e₁`.
    pub x0_prime: Option<Vec<f64>>,
    #[serde(default)]
    pub horizon: usize,
    #[serde(default)]
    pub epsilon: f64,
    /// Public input stack of length `(horizon + 1) m`; zeros when absent.
    pub inputs: Option<Vec<f64>>,
}

pub fn matrix(name: &str, rows: &Rows) -> Result<Matrix, CliError> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().position(|r| r.len() != ncols) {
        return Err(CliError::Validation(format!("{name}: row {bad} has {} entries, expected {ncols}", rows[bad].len())));
    }
    Ok(Matrix::from_row_iterator(nrows, ncols, rows.iter().flatten().copied()))
}

/// Everything needed by the subcommands, validated against each other.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub raw: ScenarioConfig,
    pub plant: LtiPlant,
    pub exo: ExoSystem,
    pub gains: FusionCenterGains,
    pub x0: Vector,
    pub x_hat0: Vector,
    pub x_r0: Vector,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub runs: Option<usize>,
    pub horizon: Option<usize>,
}

impl Scenario {
    pub fn load(path: &Path, overrides: Overrides) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text, overrides)
    }

    pub fn parse(text: &str, overrides: Overrides) -> Result<Self, CliError> {
        let mut raw: ScenarioConfig = toml::from_str(text).map_err(|e| CliError::Parse(e.message().to_string()))?;
        if let Some(seed) = overrides.seed {
            raw.sim.seed = seed;
        }
        if let Some(runs) = overrides.runs {
            raw.sim.runs = runs;
        }
        if let Some(horizon) = overrides.horizon {
            // the file's averaging window belongs to the file's horizon
            raw.sim.horizon = horizon;
            raw.sim.burn_in = None;
            raw.sim.window = None;
        }
        Self::from_raw(raw)
    }

    pub fn from_raw(raw: ScenarioConfig) -> Result<Self, CliError> {
        let p = &raw.plant;
        let plant = LtiPlant::new(matrix("plant.a", &p.a)?, matrix("plant.b", &p.b)?, matrix("plant.c", &p.c)?, matrix("plant.h_p", &p.h_p)?)?;
        let exo = ExoSystem::new(matrix("exo.a_r", &raw.exo.a_r)?, matrix("exo.h_r", &raw.exo.h_r)?)?;
        exo.check_against(&plant)?;
        let l = matrix("gains.l", &raw.gains.l)?;
        let k_x = matrix("gains.k_x", &raw.gains.k_x)?;
        let k_r = match &raw.gains.k_r {
            Some(rows) => matrix("gains.k_r", rows)?,
            None => gain_kr(&k_x, &solve_regulator_equations(&plant, &exo)?)?,
        };
        let gains = FusionCenterGains::new(&plant, &exo, l, k_x, k_r)?;
        let init = &raw.initial;
        let scenario = Self {
            plant,
            exo,
            gains,
            x0: Vector::from_column_slice(&init.x0),
            x_hat0: Vector::from_column_slice(&init.x_hat0),
            x_r0: Vector::from_column_slice(&init.x_r0),
            raw,
        };
        // design may be asked to fill in a missing step size
        if scenario.schedule_given() {
            scenario.sim_config()?.validate()?;
        } else {
            let mut cfg = scenario.sim_config_with(StepSchedule::fixed(1.0)?)?;
            cfg.quantizer = QuantizerKind::Identity;
            cfg.validate()?;
        }
        scenario.check_sim_section()?;
        Ok(scenario)
    }

    fn check_sim_section(&self) -> Result<(), CliError> {
        let sim = &self.raw.sim;
        if sim.runs == 0 {
            return Err(CliError::Validation("sim.runs must be at least 1".into()));
        }
        if sim.window() == 0 || sim.burn_in() + sim.window() > sim.horizon + 1 {
            return Err(CliError::Validation(format!(
                "sim.burn_in + sim.window must lie within the {} recorded steps",
                sim.horizon + 1
            )));
        }
        self.q_weight()?;
        Ok(())
    }

    pub fn q_weight(&self) -> Result<Matrix, CliError> {
        let q = self.plant.n_tracked();
        match &self.raw.sim.q_weight {
            Some(rows) => {
                let m = matrix("sim.q_weight", rows)?;
                if m.shape() != (q, q) {
                    return Err(CliError::Validation(format!("sim.q_weight must be {q}x{q}")));
                }
                Ok(m)
            }
            None => Ok(Matrix::identity(q, q)),
        }
    }

    /// Step schedule described by the quantizer section.
    pub fn schedule(&self) -> Result<StepSchedule, CliError> {
        let qz = &self.raw.quantizer;
        let need = |v: Option<f64>, key: &str| {
            v.ok_or_else(|| CliError::Validation(format!("quantizer.{key} is required for kind {:?}", qz.kind)))
        };
        let schedule = match qz.kind {
            QuantizerChoice::Identity => StepSchedule::fixed(qz.d0.unwrap_or(1.0))?,
            QuantizerChoice::Deterministic | QuantizerChoice::Static => StepSchedule::fixed(need(qz.d0, "d0")?)?,
            QuantizerChoice::Dynamic => {
                StepSchedule::new(need(qz.d0, "d0")?, qz.d_star.unwrap_or(0.0), need(qz.q, "q")?)?
            }
        };
        Ok(schedule)
    }

    pub fn quantizer_kind(&self) -> QuantizerKind {
        match self.raw.quantizer.kind {
            QuantizerChoice::Identity => QuantizerKind::Identity,
            QuantizerChoice::Deterministic => QuantizerKind::Deterministic,
            QuantizerChoice::Static | QuantizerChoice::Dynamic => QuantizerKind::Stochastic,
        }
    }

    fn schedule_given(&self) -> bool {
        let qz = &self.raw.quantizer;
        match qz.kind {
            QuantizerChoice::Identity => true,
            QuantizerChoice::Deterministic | QuantizerChoice::Static => qz.d0.is_some(),
            QuantizerChoice::Dynamic => qz.d0.is_some() && qz.q.is_some(),
        }
    }

    pub fn sim_config(&self) -> Result<SimulationConfig, CliError> {
        self.sim_config_with(self.schedule()?)
    }

    fn sim_config_with(&self, schedule: StepSchedule) -> Result<SimulationConfig, CliError> {
        let noise = NoisePolicy::new(self.raw.noise.sigma, self.raw.noise.cutoff)?;
        Ok(SimulationConfig {
            plant: self.plant.clone(),
            exo: self.exo.clone(),
            gains: self.gains.clone(),
            quantizer: self.quantizer_kind(),
            schedule,
            noise,
            x0: self.x0.clone(),
            x_hat0: self.x_hat0.clone(),
            x_r0: self.x_r0.clone(),
            horizon: self.raw.sim.horizon,
            seed: self.raw.sim.seed,
        })
    }

    pub fn privacy(&self) -> Result<&PrivacySection, CliError> {
        self.raw.privacy.as_ref().ok_or_else(|| CliError::Validation("a [privacy] section is required".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[plant]
a = [[0.5]]
b = [[1.0]]
c = [[1.0]]
h_p = [[1.0]]
[exo]
a_r = [[1.0]]
h_r = [[1.0]]
[gains]
l = [[-0.5]]
k_x = [[-0.5]]
[quantizer]
kind = "static"
d0 = 1.0
[initial]
x0 = [0.0]
x_hat0 = [0.0]
x_r0 = [1.0]
"#;

    #[test]
    fn parses_and_derives_kr() {
        let s = Scenario::parse(MINIMAL, Overrides::default()).unwrap();
        assert!((s.gains.k_r[(0, 0)] - 1.0).abs() < 1e-12);
        assert_eq!(s.raw.sim.burn_in(), 500);
        assert_eq!(s.raw.sim.window(), 501);
        assert_eq!(s.quantizer_kind(), QuantizerKind::Stochastic);
    }

    #[test]
    fn overrides_apply() {
        let o = Overrides { seed: Some(9), runs: Some(3), horizon: Some(40) };
        let s = Scenario::parse(MINIMAL, o).unwrap();
        assert_eq!((s.raw.sim.seed, s.raw.sim.runs, s.raw.sim.horizon), (9, 3, 40));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_shapes() {
        let text = MINIMAL.replace("d0 = 1.0", "d0 = 1.0\nstep = 2.0");
        assert!(matches!(Scenario::parse(&text, Overrides::default()), Err(CliError::Parse(_))));
        let text = MINIMAL.replace("x0 = [0.0]", "x0 = [0.0, 1.0]");
        assert!(matches!(Scenario::parse(&text, Overrides::default()), Err(CliError::Core(_))));
        let text = MINIMAL.replace("a = [[0.5]]", "a = [[0.5, 1.0], [2.0]]");
        assert!(matches!(Scenario::parse(&text, Overrides::default()), Err(CliError::Validation(_))));
        let text = MINIMAL.replace("kind = \"static\"", "kind = \"dynamic\"");
        let s = Scenario::parse(&text, Overrides::default()).unwrap();
        assert!(matches!(s.sim_config(), Err(CliError::Validation(_))));
        let text = MINIMAL.replace("d0 = 1.0", "d0 = -1.0");
        assert!(matches!(Scenario::parse(&text, Overrides::default()), Err(CliError::Core(_))));
    }
}
