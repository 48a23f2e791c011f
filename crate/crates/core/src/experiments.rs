//! Config-driven parameter sweeps and CSV emission.
//!
//! A sweep varies one parameter (library size, coverage range, cache size,
//! or requests per SBS for the minimum-cache-size curve) while everything
//! else stays at the defaults of the baseline topology: a 500 m macro disc,
//! a 60 m SBS grid, 200 files under Zipf(0.7), cache size 20 and 100
//! requests per SBS. Output is CSV with a fixed header, one row per grid
//! point per scenario, rows ordered by grid index; runs with the same
//! config and seed are byte-identical.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{build_grid, estimate_gamma, GammaEstimate, GeometryError};
use crate::model::{
    CoverageProfile, ModelError, Placement, PopularityProfile, Scenario, ScenarioSpec,
};
use crate::optimizer::{
    backhaul_rate, quantize, scenario_bounds, solve_placement, OptimizerError, SolveResult,
};
use crate::secrecy::{max_cache_size_s2, min_cache_size_s1};
use crate::sim::{simulate_delivery, RequestMode, SimConfig, SimError, SimReport};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Which parameter the sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    /// Library size `N`.
    LibrarySize,
    /// SBS coverage radius `r` in meters.
    CoverageRange,
    /// Cache size `M` in files.
    CacheSize,
    /// Requests per SBS `Q`, reporting the minimum secure cache size.
    MinCacheVsQ,
}

/// Scenario selector as it appears in config files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioTag {
    NoSecrecy,
    S1,
    S2,
}

impl ScenarioTag {
    fn to_spec(self, requests_per_sbs: u32, epsilon_sec: f64) -> ScenarioSpec {
        let scenario = match self {
            ScenarioTag::NoSecrecy => Scenario::NoSecrecy,
            ScenarioTag::S1 => Scenario::S1 { requests_per_sbs },
            ScenarioTag::S2 => Scenario::S2,
        };
        ScenarioSpec {
            scenario,
            epsilon_sec,
        }
    }
}

fn default_sweep() -> SweepKind {
    SweepKind::CacheSize
}
fn default_n_files() -> usize {
    200
}
fn default_cache_size() -> f64 {
    20.0
}
fn default_requests_per_sbs() -> u32 {
    100
}
fn default_alpha() -> f64 {
    0.7
}
fn default_sbs_radius() -> f64 {
    60.0
}
fn default_spacing() -> f64 {
    60.0
}
fn default_mbs_radius() -> f64 {
    500.0
}
fn default_user_density() -> f64 {
    0.05
}
fn default_fragments() -> u32 {
    1000
}
fn default_gamma_samples() -> u64 {
    1_000_000
}
fn default_seed() -> u64 {
    1
}
fn default_requests_total() -> u64 {
    100_000
}
fn default_epsilon_sec() -> f64 {
    crate::model::DEFAULT_EPSILON_SEC
}
fn default_scenarios() -> Vec<ScenarioTag> {
    vec![ScenarioTag::NoSecrecy, ScenarioTag::S1, ScenarioTag::S2]
}
fn default_request_mode() -> RequestMode {
    RequestMode::Expected
}

/// Flat declarative experiment description. Every field has a baseline
/// default, so `{}` reproduces the reference setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_sweep")]
    pub sweep: SweepKind,
    /// Sweep grid; when omitted a documented default per sweep kind is used.
    #[serde(default)]
    pub grid: Option<Vec<f64>>,
    #[serde(default = "default_n_files")]
    pub n_files: usize,
    #[serde(default = "default_cache_size")]
    pub cache_size: f64,
    #[serde(default = "default_requests_per_sbs")]
    pub requests_per_sbs: u32,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_sbs_radius")]
    pub sbs_radius: f64,
    #[serde(default = "default_spacing")]
    pub spacing: f64,
    #[serde(default = "default_mbs_radius")]
    pub mbs_radius: f64,
    #[serde(default = "default_user_density")]
    pub user_density: f64,
    #[serde(default = "default_fragments")]
    pub fragments: u32,
    #[serde(default = "default_gamma_samples")]
    pub gamma_samples: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_requests_total")]
    pub requests_total: u64,
    #[serde(default = "default_request_mode")]
    pub request_mode: RequestMode,
    #[serde(default = "default_epsilon_sec")]
    pub epsilon_sec: f64,
    #[serde(default = "default_scenarios")]
    pub scenarios: Vec<ScenarioTag>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config deserializes")
    }
}

impl ExperimentConfig {
    /// Parses a JSON config, reporting serde's line/column diagnostics.
    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.n_files == 0 {
            return Err(ExperimentError::Config("n_files must be positive".into()));
        }
        for (name, v) in [
            ("cache_size", self.cache_size),
            ("alpha", self.alpha),
            ("sbs_radius", self.sbs_radius),
            ("spacing", self.spacing),
            ("mbs_radius", self.mbs_radius),
            ("user_density", self.user_density),
            ("epsilon_sec", self.epsilon_sec),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(ExperimentError::Config(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        if let Some(grid) = &self.grid {
            if grid.is_empty() {
                return Err(ExperimentError::Config("grid must be non-empty".into()));
            }
        }
        if self.scenarios.is_empty() {
            return Err(ExperimentError::Config(
                "at least one scenario is required".into(),
            ));
        }
        Ok(())
    }

    /// The effective sweep grid: the explicit one or the documented default.
    pub fn effective_grid(&self) -> Vec<f64> {
        if let Some(grid) = &self.grid {
            return grid.clone();
        }
        match self.sweep {
            SweepKind::LibrarySize => (50..=500).step_by(25).map(|v| v as f64).collect(),
            SweepKind::CoverageRange => (43..=60).map(|v| v as f64).collect(),
            SweepKind::CacheSize => (0..=60).step_by(2).map(|v| v as f64).collect(),
            SweepKind::MinCacheVsQ => (1..=20).map(|v| (v * 50) as f64).collect(),
        }
    }

    fn gamma_for_radius(&self, radius: f64) -> Result<GammaEstimate, ExperimentError> {
        let topo = build_grid(self.mbs_radius, self.spacing, radius, self.user_density)?;
        Ok(estimate_gamma(&topo, self.gamma_samples, self.seed)?)
    }
}

/// One CSV row of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub sweep_value: f64,
    pub scenario: &'static str,
    /// Backhaul rate at the optimum; absent for threshold-only sweeps.
    pub rate: Option<f64>,
    pub feasible: bool,
    /// Scenario-dependent extra: minimum secure cache size for the backhaul
    /// eavesdropper, maximum absorbable cache size for the cache
    /// eavesdropper.
    pub extra: Option<f64>,
}

/// Ordered sweep output.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sweep_value,scenario,rate,feasible,extra\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                row.sweep_value,
                row.scenario,
                row.rate.map(|r| r.to_string()).unwrap_or_default(),
                row.feasible,
                row.extra.map(|e| e.to_string()).unwrap_or_default(),
            ));
        }
        out
    }
}

/// Runs the configured sweep. Points execute in parallel; rows come back in
/// grid order, scenarios in config order within each point.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepTable, ExperimentError> {
    config.validate()?;
    let grid = config.effective_grid();

    if config.sweep == SweepKind::MinCacheVsQ {
        let p = PopularityProfile::zipf(config.n_files, config.alpha)?;
        let rows = grid
            .iter()
            .map(|&q_req| {
                let threshold = min_cache_size_s1(&p, q_req.round() as u32);
                SweepRow {
                    sweep_value: q_req,
                    scenario: "s1",
                    rate: None,
                    feasible: true,
                    extra: Some(threshold.tight),
                }
            })
            .collect();
        return Ok(SweepTable { rows });
    }

    // Coverage profiles per radius, computed once per distinct value.
    let mut gammas: HashMap<u64, CoverageProfile> = HashMap::new();
    let radii: Vec<f64> = match config.sweep {
        SweepKind::CoverageRange => grid.clone(),
        _ => vec![config.sbs_radius],
    };
    for &r in &radii {
        gammas
            .entry(r.to_bits())
            .or_insert(config.gamma_for_radius(r)?.profile);
    }

    let results: Result<Vec<Vec<SweepRow>>, ExperimentError> = grid
        .par_iter()
        .map(|&value| {
            let (n_files, cache_size, radius) = match config.sweep {
                SweepKind::LibrarySize => (value as usize, config.cache_size, config.sbs_radius),
                SweepKind::CacheSize => (config.n_files, value, config.sbs_radius),
                SweepKind::CoverageRange => (config.n_files, config.cache_size, value),
                SweepKind::MinCacheVsQ => unreachable!(),
            };
            let p = PopularityProfile::zipf(n_files, config.alpha)?;
            let gamma = &gammas[&radius.to_bits()];
            config
                .scenarios
                .iter()
                .map(|tag| {
                    let spec = tag.to_spec(config.requests_per_sbs, config.epsilon_sec);
                    let bounds = scenario_bounds(&spec, &p, gamma.max_coverage());
                    let sol = solve_placement(&p, gamma, cache_size, &bounds)?;
                    let extra = match spec.scenario {
                        Scenario::S1 { requests_per_sbs } => {
                            Some(min_cache_size_s1(&p, requests_per_sbs).tight)
                        }
                        Scenario::S2 => {
                            Some(max_cache_size_s2(n_files, gamma.max_coverage()))
                        }
                        Scenario::NoSecrecy => None,
                    };
                    Ok(SweepRow {
                        sweep_value: value,
                        scenario: spec.label(),
                        rate: Some(sol.rate),
                        feasible: sol.feasible,
                        extra,
                    })
                })
                .collect()
        })
        .collect();
    Ok(SweepTable {
        rows: results?.into_iter().flatten().collect(),
    })
}

/// Solution of a single parameter point: the continuous optimum, its
/// quantized placement and the surrounding profiles.
pub struct PlacementPoint {
    pub popularity: PopularityProfile,
    pub gamma: CoverageProfile,
    pub bounds: crate::optimizer::Bounds,
    pub solution: SolveResult,
    pub placement: Placement,
    pub n_sbs: u32,
}

/// Solves the configured point for one scenario and quantizes the result.
pub fn solve_point(
    config: &ExperimentConfig,
    tag: ScenarioTag,
) -> Result<PlacementPoint, ExperimentError> {
    config.validate()?;
    let p = PopularityProfile::zipf(config.n_files, config.alpha)?;
    let topo = build_grid(
        config.mbs_radius,
        config.spacing,
        config.sbs_radius,
        config.user_density,
    )?;
    let gamma = estimate_gamma(&topo, config.gamma_samples, config.seed)?.profile;
    let spec = tag.to_spec(config.requests_per_sbs, config.epsilon_sec);
    let bounds = scenario_bounds(&spec, &p, gamma.max_coverage());
    let solution = solve_placement(&p, &gamma, config.cache_size, &bounds)?;
    let placement = quantize(
        &solution,
        &p,
        gamma.max_coverage(),
        config.fragments,
        topo.n_sbs,
        config.cache_size,
        &spec,
    )?;
    Ok(PlacementPoint {
        popularity: p,
        gamma,
        bounds,
        solution,
        placement,
        n_sbs: topo.n_sbs,
    })
}

/// Per-file placement dump for one scenario at the configured point.
pub fn emit_placement(
    config: &ExperimentConfig,
    tag: ScenarioTag,
) -> Result<String, ExperimentError> {
    let point = solve_point(config, tag)?;
    Ok(point
        .solution
        .to_csv(&point.popularity, &point.bounds, &point.placement))
}

/// Runs the delivery simulation for one scenario at the configured point and
/// returns the report together with the analytic rate of the quantized
/// placement.
pub fn simulate_point(
    config: &ExperimentConfig,
    tag: ScenarioTag,
) -> Result<(SimReport, f64), ExperimentError> {
    let point = solve_point(config, tag)?;
    let analytic = backhaul_rate(&point.placement.q, &point.popularity, &point.gamma)?;
    let sim_cfg = SimConfig {
        requests_total: config.requests_total,
        seed: config.seed,
        mode: config.request_mode,
        requests_per_sbs: config.requests_per_sbs,
    };
    let report = simulate_delivery(&point.placement, &point.popularity, &point.gamma, &sim_cfg)?;
    Ok((report, analytic))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(sweep: SweepKind) -> ExperimentConfig {
        ExperimentConfig {
            sweep,
            grid: Some(match sweep {
                SweepKind::LibrarySize => vec![50.0, 100.0, 150.0],
                SweepKind::CoverageRange => vec![45.0, 55.0],
                SweepKind::CacheSize => vec![0.0, 10.0, 30.0],
                SweepKind::MinCacheVsQ => vec![50.0, 200.0, 500.0],
            }),
            gamma_samples: 50_000,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn default_config_from_empty_json() {
        let cfg = ExperimentConfig::from_json("{}").unwrap();
        assert_eq!(cfg.n_files, 200);
        assert_eq!(cfg.cache_size, 20.0);
        assert_eq!(cfg.requests_per_sbs, 100);
        assert_eq!(cfg.alpha, 0.7);
        assert_eq!(cfg.sbs_radius, 60.0);
    }

    #[test]
    fn config_rejects_unknown_and_invalid_fields() {
        assert!(ExperimentConfig::from_json("{\"bogus\": 1}").is_err());
        assert!(ExperimentConfig::from_json("{\"n_files\": 0}").is_err());
        assert!(ExperimentConfig::from_json("{\"alpha\": -1.0}").is_err());
        assert!(ExperimentConfig::from_json("{\"grid\": []}").is_err());
        assert!(ExperimentConfig::from_json("{\"scenarios\": []}").is_err());
        let err = ExperimentConfig::from_json("{\"n_files\": }").unwrap_err();
        assert!(err.to_string().contains("column"));
    }

    #[test]
    fn sweep_rows_ordered_and_complete() {
        let cfg = small_config(SweepKind::CacheSize);
        let table = run_sweep(&cfg).unwrap();
        assert_eq!(table.rows.len(), 3 * 3);
        let values: Vec<f64> = table.rows.iter().map(|r| r.sweep_value).collect();
        assert_eq!(
            values,
            vec![0.0, 0.0, 0.0, 10.0, 10.0, 10.0, 30.0, 30.0, 30.0]
        );
        // Infeasible points are emitted, never dropped.
        let s1_at_zero = table
            .rows
            .iter()
            .find(|r| r.sweep_value == 0.0 && r.scenario == "s1")
            .unwrap();
        assert!(!s1_at_zero.feasible);
        assert_eq!(s1_at_zero.rate, Some(1.0));
    }

    #[test]
    fn sweep_is_deterministic() {
        let cfg = small_config(SweepKind::CoverageRange);
        let a = run_sweep(&cfg).unwrap().to_csv();
        let b = run_sweep(&cfg).unwrap().to_csv();
        assert_eq!(a, b);
    }

    #[test]
    fn min_cache_sweep_monotone() {
        let cfg = small_config(SweepKind::MinCacheVsQ);
        let table = run_sweep(&cfg).unwrap();
        let thresholds: Vec<f64> = table.rows.iter().map(|r| r.extra.unwrap()).collect();
        assert!(thresholds.windows(2).all(|w| w[0] <= w[1] + 1e-12));
    }

    #[test]
    fn placement_dump_has_expected_shape() {
        let mut cfg = small_config(SweepKind::CacheSize);
        cfg.n_files = 20;
        cfg.cache_size = 20.0;
        let csv = emit_placement(&cfg, ScenarioTag::NoSecrecy).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "file,p,l,u,q,m,rate_contrib");
        assert_eq!(lines.len(), 21);
        // M = N: everything cached in full.
        for line in &lines[1..] {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields[4], "1");
            assert_eq!(fields[5], "1000");
        }
    }

    #[test]
    fn s2_placement_respects_packet_cap() {
        let cfg = small_config(SweepKind::CacheSize);
        let point = solve_point(&cfg, ScenarioTag::S2).unwrap();
        let s = point.gamma.max_coverage();
        let cap = (1000u32).div_ceil(s) - 1;
        assert!(point.placement.m.iter().all(|&m| m <= cap));
    }

    #[test]
    fn simulate_point_agrees_with_analytic() {
        let mut cfg = small_config(SweepKind::CacheSize);
        cfg.requests_total = 50_000;
        let (report, analytic) = simulate_point(&cfg, ScenarioTag::NoSecrecy).unwrap();
        assert!((report.empirical_rate - analytic).abs() <= 4.0 * report.stderr.max(1e-4));
    }
}
