//! Experiment front end: loads a JSON config, runs sweeps or single-point
//! computations and writes CSV.
//!
//! Exit codes: 0 on success, 2 on config errors, 3 on internal invariant
//! violations.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use seccache::experiments::{
    emit_placement, run_sweep, simulate_point, ExperimentConfig, ExperimentError, ScenarioTag,
};
use seccache::geometry::{build_grid, estimate_gamma};

#[derive(Parser)]
#[command(
    name = "seccache",
    about = "MDS-coded cache placement under eavesdropping constraints"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Path to a JSON experiment config; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured parameter sweep and emit one row per grid point
    /// per scenario.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated subset of scenarios (no_secrecy, s1, s2).
        #[arg(long, value_delimiter = ',')]
        scenarios: Option<Vec<String>>,
    },
    /// Dump the per-file placement table for one scenario.
    Placement {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "no_secrecy")]
        scenario: String,
    },
    /// Simulate the delivery phase for one scenario.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "no_secrecy")]
        scenario: String,
        /// Overrides the configured number of simulated requests.
        #[arg(long)]
        requests: Option<u64>,
    },
    /// Estimate the coverage-count distribution of the configured topology.
    Gamma {
        #[command(flatten)]
        common: Common,
    },
}

fn parse_scenario(name: &str) -> Result<ScenarioTag, String> {
    match name {
        "no_secrecy" | "none" => Ok(ScenarioTag::NoSecrecy),
        "s1" => Ok(ScenarioTag::S1),
        "s2" => Ok(ScenarioTag::S2),
        other => Err(format!(
            "unknown scenario '{other}' (expected no_secrecy, s1 or s2)"
        )),
    }
}

fn load_config(common: &Common) -> Result<ExperimentConfig, String> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            ExperimentConfig::from_json(&text).map_err(|e| e.to_string())?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn write_output(common: &Common, csv: &str) -> anyhow::Result<()> {
    match &common.out {
        Some(path) => fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

enum CliError {
    Config(String),
    Internal(String),
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Config(msg) => CliError::Config(msg),
            other => CliError::Internal(other.to_string()),
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Sweep { common, scenarios } => {
            let mut cfg = load_config(&common).map_err(CliError::Config)?;
            if let Some(names) = scenarios {
                cfg.scenarios = names
                    .iter()
                    .map(|s| parse_scenario(s))
                    .collect::<Result<_, _>>()
                    .map_err(CliError::Config)?;
            }
            let table = run_sweep(&cfg)?;
            write_output(&common, &table.to_csv())
                .map_err(|e| CliError::Internal(e.to_string()))?;
        }
        Command::Placement { common, scenario } => {
            let cfg = load_config(&common).map_err(CliError::Config)?;
            let tag = parse_scenario(&scenario).map_err(CliError::Config)?;
            let csv = emit_placement(&cfg, tag)?;
            write_output(&common, &csv).map_err(|e| CliError::Internal(e.to_string()))?;
        }
        Command::Simulate {
            common,
            scenario,
            requests,
        } => {
            let mut cfg = load_config(&common).map_err(CliError::Config)?;
            if let Some(r) = requests {
                cfg.requests_total = r;
            }
            let tag = parse_scenario(&scenario).map_err(CliError::Config)?;
            let (report, analytic) = simulate_point(&cfg, tag)?;
            let csv = format!(
                "empirical_rate,stderr,analytic_rate,s1_breach,s2_breach\n{},{},{},{},{}\n",
                report.empirical_rate,
                report.stderr,
                analytic,
                report.s1_breach,
                report.s2_breach
            );
            write_output(&common, &csv).map_err(|e| CliError::Internal(e.to_string()))?;
        }
        Command::Gamma { common } => {
            let cfg = load_config(&common).map_err(CliError::Config)?;
            let topo = build_grid(cfg.mbs_radius, cfg.spacing, cfg.sbs_radius, cfg.user_density)
                .map_err(|e| CliError::Config(e.to_string()))?;
            if !topo.radius_in_regime {
                eprintln!(
                    "warning: sbs_radius {} outside [spacing/sqrt(2), spacing] = [{:.2}, {}]",
                    cfg.sbs_radius,
                    cfg.spacing / std::f64::consts::SQRT_2,
                    cfg.spacing
                );
            }
            let est = estimate_gamma(&topo, cfg.gamma_samples, cfg.seed)
                .map_err(|e| CliError::Internal(e.to_string()))?;
            if est.uncovered > 0.0 {
                eprintln!("uncovered fraction: {}", est.uncovered);
            }
            write_output(&common, &est.to_csv()).map_err(|e| CliError::Internal(e.to_string()))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Internal(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
