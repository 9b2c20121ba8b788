//! Command-line front end: scenario files in, summaries and CSV out.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod repro;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{Overrides, Scenario, ScenarioConfig};
pub use error::CliError;
pub use output::Summary;

#[derive(Debug, Parser)]
#[command(name = "stoq", version, about = "Private quantized feedback: design, simulate, audit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Master seed; overrides sim.seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Ensemble size; overrides sim.runs.
    #[arg(long)]
    pub runs: Option<usize>,
    /// Number of steps; overrides sim.horizon and resets burn_in/window.
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Suppress stdout; files are still written.
    #[arg(long)]
    pub quiet: bool,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides { seed: self.seed, runs: self.runs, horizon: self.horizon }
    }

    fn scenario(&self) -> Result<Scenario, CliError> {
        let path = self.config.as_ref().ok_or_else(|| CliError::Validation("--config is required".into()))?;
        Scenario::load(path, self.overrides())
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the standing assumptions; exits nonzero if any fails.
    Check(CommonArgs),
    /// Step sizes and noise level for the configured privacy budget.
    Design(CommonArgs),
    /// Run the Monte Carlo ensemble and write one CSV per run.
    Simulate(CommonArgs),
    /// Exact divergence of the configured small instance.
    Audit(CommonArgs),
    /// Tracking-cost upper bound.
    Bound(CommonArgs),
    /// Recompute the built-in reference numbers.
    Repro(CommonArgs),
}

fn emit(args: &CommonArgs, name: &str, text: &str, summary: &Summary) -> Result<(), CliError> {
    if !args.quiet {
        print!("{text}");
    }
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)?;
        summary.write_to(&dir.join(format!("{name}.txt")))?;
    }
    Ok(())
}

/// Runs a parsed command line and returns the process exit status.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Check(args) => {
            let (summary, ok) = commands::check(&args.scenario()?)?;
            emit(&args, "check", &summary.render(), &summary)?;
            if !ok {
                return Err(CliError::AssumptionsFailed(summary.get("details").unwrap_or_default().to_string()));
            }
        }
        Command::Design(args) => {
            let summary = commands::design(&args.scenario()?)?;
            emit(&args, "design", &summary.render(), &summary)?;
        }
        Command::Bound(args) => {
            let summary = commands::bound(&args.scenario()?)?;
            emit(&args, "bound", &summary.render(), &summary)?;
        }
        Command::Audit(args) => {
            let summary = commands::audit(&args.scenario()?)?;
            emit(&args, "audit", &summary.render(), &summary)?;
        }
        Command::Simulate(args) => {
            let scenario = args.scenario()?;
            let dir = args.out.clone().unwrap_or_else(|| PathBuf::from("stoq-out"));
            let summary = commands::simulate(&scenario, &dir)?;
            if !args.quiet {
                print!("{}", summary.render());
                println!(
                    "j_hat = {} +- {}",
                    summary.get("j_hat").unwrap_or_default(),
                    summary.get("std_err").unwrap_or_default()
                );
            }
        }
        Command::Repro(args) => {
            let mut opts = repro::ReproOptions { seed: args.seed.unwrap_or(0), ..Default::default() };
            if let Some(runs) = args.runs {
                opts.static_runs = runs;
                opts.dynamic_runs = runs;
                opts.motivating_runs = runs;
            }
            if args.config.is_some() || args.horizon.is_some() {
                return Err(CliError::Validation("repro uses built-in scenarios; only --runs, --seed, --out and --quiet apply".into()));
            }
            let report = repro::repro(&opts)?;
            emit(&args, "repro", &report.render_table(), &report.summary)?;
        }
    }
    Ok(())
}
