//! Subcommands other than `repro`.

use std::fs;
use std::path::Path;

use stoq_core::linalg::{induced_norm_1, spectral_radius};
use stoq_core::plant::{check_assumptions, closed_loop_matrix, DEFAULT_ASSUMPTION_TOL};
use stoq_core::privacy::{
    audit_mechanism, design_unstable_mechanism, dynamic_delta_for_d0, dynamic_step_bound, estimate_beta_lambda,
    static_delta_for_step, static_step_bound, Horizon, UnstableParams, DEFAULT_K_MAX, DEFAULT_MARGIN,
};
use stoq_core::simulate::{estimate_tracking_cost, simulate_ensemble, tracking_cost_bound};
use stoq_core::{Error, Vector};

use crate::config::{QuantizerChoice, Scenario};
use crate::error::CliError;
use crate::output::{fmt_f64, write_trajectory, Summary};

/// Absolute slack when comparing an audited divergence with its certificate;
/// both sides carry a few ulps of rounding.
const ROUNDING_SLACK: f64 = 1e-12;

/// Assumption report; the flag tells whether every assumption holds.
pub fn check(s: &Scenario) -> Result<(Summary, bool), CliError> {
    let report = check_assumptions(&s.plant, &s.exo, DEFAULT_ASSUMPTION_TOL);
    let mut out = Summary::default();
    out.push("exo_modulus_ok", report.a1_exo_modulus_ok);
    out.push("stabilizable", report.a2_stabilizable);
    out.push("detectable", report.a3_detectable);
    out.push("regulator_solvable", report.a4_regulator_solvable);
    out.push("all_hold", report.all_hold());
    if let Ok(cl) = closed_loop_matrix(&s.plant, &s.gains) {
        out.push_f64("closed_loop_spectral_radius", spectral_radius(&cl)?);
    }
    out.push("details", report.details.replace('\n', "; "));
    Ok((out, report.all_hold()))
}

fn horizon_label(h: Horizon) -> String {
    match h {
        Horizon::Finite(k) => k.to_string(),
        Horizon::Infinite => "infinite".to_string(),
    }
}

/// Quantizer step sizes (and input noise when needed) meeting the privacy
/// section's budget.
pub fn design(s: &Scenario) -> Result<Summary, CliError> {
    let pr = s.privacy()?;
    let qz = &s.raw.quantizer;
    if !matches!(qz.kind, QuantizerChoice::Static | QuantizerChoice::Dynamic) {
        return Err(CliError::Validation("design needs quantizer kind static or dynamic".into()));
    }
    let est = estimate_beta_lambda(&s.plant.a, DEFAULT_MARGIN, DEFAULT_K_MAX)?;
    let c1 = induced_norm_1(&s.plant.c)?;
    let horizon = pr.horizon();
    let direct = pr.delta.is_some() && (matches!(horizon, Horizon::Finite(_)) || est.lambda < 1.0);

    let mut out = Summary::default();
    out.push_f64("beta", est.beta);
    out.push_f64("lambda", est.lambda);
    out.push("horizon", horizon_label(horizon));
    out.push_f64("zeta", pr.zeta);

    if direct {
        let delta = pr.delta.expect("checked above");
        let finite = matches!(horizon, Horizon::Finite(_));
        match qz.kind {
            QuantizerChoice::Static => {
                let d = static_step_bound(&est, c1, pr.zeta, delta, horizon)?;
                out.push("mechanism", if finite { "static-finite" } else { "static-infinite" });
                out.push("kind", "static");
                out.push_f64("d0", d);
            }
            _ => {
                let q = qz.q.ok_or_else(|| CliError::Validation("quantizer.q is required for kind dynamic".into()))?;
                let b = dynamic_step_bound(&est, c1, pr.zeta, delta, q, horizon)?;
                out.push("mechanism", if finite { "decaying-finite" } else { "decaying-infinite" });
                out.push("kind", "dynamic");
                match (b.d0_min, b.d_star_min) {
                    (Some(d0), _) => {
                        out.push("route", "initial-step");
                        out.push_f64("d0", d0);
                        out.push_f64("d_star", qz.d_star.unwrap_or(0.0).min(d0));
                    }
                    (None, Some(d_star)) => {
                        out.push("route", "terminal-step");
                        out.push_f64("d0", qz.d0.unwrap_or(d_star).max(d_star));
                        out.push_f64("d_star", d_star);
                    }
                    (None, None) => unreachable!("designer rejects this case"),
                }
                out.push_f64("q", q);
                if let Some(d0) = b.d0_min {
                    out.push_f64("d0_min", d0);
                }
                if let Some(d_star) = b.d_star_min {
                    out.push_f64("d_star_min", d_star);
                }
            }
        }
        out.push_f64("epsilon", 0.0);
        out.push_f64("delta", delta);
        return Ok(out);
    }

    if !pr.has_split_budget() {
        return Err(Error::UnsupportedRegime(format!(
            "lambda = {} with horizon {} needs epsilon0, delta1 and delta2 for the input-noise design",
            est.lambda,
            horizon_label(horizon)
        ))
        .into());
    }
    let need = |v: Option<f64>, key: &str| v.ok_or_else(|| CliError::Validation(format!("privacy.{key} is required")));
    let q = match qz.kind {
        QuantizerChoice::Static => 1.0,
        _ => qz.q.ok_or_else(|| CliError::Validation("quantizer.q is required for kind dynamic".into()))?,
    };
    let params = UnstableParams {
        zeta: pr.zeta,
        epsilon0: need(pr.epsilon0, "epsilon0")?,
        delta1: need(pr.delta1, "delta1")?,
        delta2: need(pr.delta2, "delta2")?,
        q,
        d_star: qz.d_star,
    };
    let design = design_unstable_mechanism(&s.plant, &est, &params)?;
    out.push("mechanism", "input-noise");
    out.push("kind", if design.schedule.is_static() { "static" } else { "dynamic" });
    out.push("n_star", design.n_star);
    out.push_f64("d0", design.schedule.d0());
    out.push_f64("d_star", design.schedule.d_star());
    out.push_f64("q", design.schedule.q());
    out.push_f64("sigma", design.sigma);
    out.push_f64("sigma_squared", design.sigma * design.sigma);
    out.push("noise_cutoff", design.n_star);
    out.push_f64("sensitivity", design.sensitivity);
    out.push_f64("epsilon", design.total_epsilon());
    out.push_f64("delta1", design.delta1);
    out.push_f64("delta2", design.delta2);
    out.push_f64("delta", design.total_delta());
    Ok(out)
}

/// Cost bound for the configured quantizer: the static step, or the terminal
/// step of a decaying schedule.
pub fn bound(s: &Scenario) -> Result<Summary, CliError> {
    let schedule = s.schedule()?;
    let d = match s.raw.quantizer.kind {
        QuantizerChoice::Identity => 0.0,
        QuantizerChoice::Dynamic => schedule.d_star(),
        _ => schedule.d0(),
    };
    let q = s.q_weight()?;
    let b = tracking_cost_bound(&s.plant, &s.exo, &s.gains, &q, d)?;
    let mut out = Summary::default();
    out.push_f64("d", d);
    out.push_f64("trace_z", b.trace_z);
    out.push_f64("trace_hqh", b.trace_hqh);
    out.push_f64("bound", b.bound);
    Ok(out)
}

/// Runs the ensemble, writing `run_NNNN.csv` per run plus `summary.csv`
/// (per-run window costs) and `summary.txt` into `out_dir`.
pub fn simulate(s: &Scenario, out_dir: &Path) -> Result<Summary, CliError> {
    let cfg = s.sim_config()?;
    let sim = &s.raw.sim;
    let q = s.q_weight()?;
    let (burn_in, window) = (sim.burn_in(), sim.window());
    let trajectories = simulate_ensemble(&cfg, sim.runs)?;
    fs::create_dir_all(out_dir)?;

    let mut costs = csv::Writer::from_path(out_dir.join("summary.csv"))?;
    costs.write_record(["run", "cost"])?;
    for t in &trajectories {
        let file = fs::File::create(out_dir.join(format!("run_{:04}.csv", t.run)))?;
        write_trajectory(std::io::BufWriter::new(file), t)?;
        let (cost, _) = estimate_tracking_cost(std::slice::from_ref(t), &q, burn_in, window)?;
        costs.write_record([t.run.to_string(), fmt_f64(cost)])?;
    }
    costs.flush()?;

    let (j_hat, std_err) = estimate_tracking_cost(&trajectories, &q, burn_in, window)?;
    let mut out = Summary::default();
    out.push("runs", sim.runs);
    out.push("horizon", sim.horizon);
    out.push("seed", sim.seed);
    out.push("burn_in", burn_in);
    out.push("window", window);
    out.push_f64("j_hat", j_hat);
    out.push_f64("std_err", std_err);
    out.write_to(&out_dir.join("summary.txt"))?;
    Ok(out)
}

/// Exact divergence of the configured mechanism against the δ certified by
/// the step-size bounds.
pub fn audit(s: &Scenario) -> Result<Summary, CliError> {
    let a = s.raw.audit.as_ref().ok_or_else(|| CliError::Validation("an [audit] section is required".into()))?;
    if !matches!(s.raw.quantizer.kind, QuantizerChoice::Static | QuantizerChoice::Dynamic) {
        return Err(CliError::Validation("audit needs quantizer kind static or dynamic".into()));
    }
    let n = s.plant.n_states();
    let x0_prime = match (&a.x0_prime, &s.raw.privacy) {
        (Some(v), _) => Vector::from_column_slice(v),
        (None, Some(pr)) => {
            let mut v = s.x0.clone();
            v[0] += pr.zeta;
            v
        }
        (None, None) => return Err(CliError::Validation("audit.x0_prime or privacy.zeta is required".into())),
    };
    if x0_prime.len() != n {
        return Err(CliError::Validation(format!("audit.x0_prime must have length {n}")));
    }
    let m = s.plant.n_inputs();
    let inputs = match &a.inputs {
        Some(v) => Vector::from_column_slice(v),
        None => Vector::zeros((a.horizon + 1) * m),
    };
    let schedule = s.schedule()?;
    let divergence = audit_mechanism(&s.plant, &s.x0, &x0_prime, &inputs, &schedule, a.horizon, a.epsilon)?;

    let radius = (&s.x0 - &x0_prime).lp_norm(1);
    let est = estimate_beta_lambda(&s.plant.a, DEFAULT_MARGIN, DEFAULT_K_MAX)?;
    let c1 = induced_norm_1(&s.plant.c)?;
    let certified = if schedule.is_static() {
        static_delta_for_step(&est, c1, radius, schedule.d0(), a.horizon)
    } else {
        let route1 = dynamic_delta_for_d0(&est, c1, radius, schedule.d0(), schedule.q(), a.horizon);
        if schedule.d_star() > 0.0 {
            route1.min(static_delta_for_step(&est, c1, radius, schedule.d_star(), a.horizon))
        } else {
            route1
        }
    };

    let mut out = Summary::default();
    out.push("horizon", a.horizon);
    out.push_f64("epsilon", a.epsilon);
    out.push_f64("adjacency_radius", radius);
    out.push_f64("divergence", divergence);
    out.push_f64("certified_delta", certified);
    out.push("within_certificate", divergence <= certified + ROUNDING_SLACK);
    Ok(out)
}
