//! Monte Carlo simulation of the delivery phase.
//!
//! Each request draws a file from the popularity profile and a coverage
//! count from the coverage profile; the user collects `d * m_j` disjoint
//! cached packets and the remaining `max(0, n - d m_j)` cross the backhaul.
//! The simulator validates the analytic rate empirically and counts what
//! each eavesdropper intercepts: packets on one wiretapped MBS-to-SBS link
//! for the backhaul attacker, cache contents of `S` SBSs for the cache
//! attacker. Coded symbols are never materialized; the placement scheme
//! keeps per-SBS packets disjoint, so counting packets is exact.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::model::{CoverageProfile, Placement, PopularityProfile};

/// Requests per RNG substream; chunk results merge independently of worker
/// scheduling.
const CHUNK: u64 = 1 << 13;

/// Seed offset separating link-accounting streams from rate-sampling
/// streams.
const LINK_SEED_OFFSET: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("placement is not quantized; integer packet counts are required")]
    UnquantizedPlacement,
    #[error("requests_total must be at least 1")]
    NoRequests,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(&'static str),
    #[error("breach probability requires Stochastic request mode")]
    ExpectedModeBreach,
}

/// How per-file request counts on the wiretapped link are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum RequestMode {
    /// Deterministic rounded expectations `round(Q gamma_d p_j)`, matching
    /// the expectation-based secrecy conditions.
    Expected,
    /// Multinomial draws of the `Q` link requests.
    Stochastic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub requests_total: u64,
    pub seed: u64,
    pub mode: RequestMode,
    /// Requests carried by the wiretapped link during the delivery phase.
    pub requests_per_sbs: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    /// Mean fraction of a file served over the backhaul per request.
    pub empirical_rate: f64,
    /// Standard error of the mean.
    pub stderr: f64,
    /// Packets per file seen on the wiretapped link.
    pub s1_intercepted: Vec<u64>,
    /// Packets per file readable from the caches of `S` SBSs.
    pub s2_intercepted: Vec<u64>,
    /// True iff some file reached `n` intercepted packets on the link.
    pub s1_breach: bool,
    /// True iff some file reached `n` readable packets in the caches.
    pub s2_breach: bool,
}

impl SimReport {
    /// Single CSV row with header.
    pub fn to_csv(&self) -> String {
        format!(
            "empirical_rate,stderr,s1_breach,s2_breach\n{},{},{},{}\n",
            self.empirical_rate, self.stderr, self.s1_breach, self.s2_breach
        )
    }
}

/// Cumulative-distribution sampler over file or coverage indices.
struct Cdf {
    cumulative: Vec<f64>,
}

impl Cdf {
    fn new(probs: &[f64]) -> Self {
        let mut cumulative = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for &p in probs {
            acc += p;
            cumulative.push(acc);
        }
        // Guard the top against round-off so sampling never falls off the end.
        if let Some(last) = cumulative.last_mut() {
            *last = f64::INFINITY;
        }
        Cdf { cumulative }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        let u = rng.random::<f64>();
        self.cumulative.partition_point(|&c| c < u)
    }
}

fn validate(placement: &Placement, p: &PopularityProfile, cfg: &SimConfig) -> Result<(), SimError> {
    if !placement.quantized {
        return Err(SimError::UnquantizedPlacement);
    }
    if placement.m.len() != p.len() {
        return Err(SimError::DimensionMismatch("placement vs popularity"));
    }
    if cfg.requests_total == 0 {
        return Err(SimError::NoRequests);
    }
    Ok(())
}

/// Simulates `requests_total` delivery-phase requests and the two
/// eavesdroppers' books for one placement.
///
/// Deterministic for a fixed seed and independent of the worker count.
pub fn simulate_delivery(
    placement: &Placement,
    p: &PopularityProfile,
    gamma: &CoverageProfile,
    cfg: &SimConfig,
) -> Result<SimReport, SimError> {
    validate(placement, p, cfg)?;
    let n = placement.n as u64;
    let file_cdf = Cdf::new(p.probs());
    let cov_cdf = Cdf::new(gamma.gammas());

    // Empirical backhaul rate over i.i.d. requests.
    let requests = cfg.requests_total;
    let n_chunks = requests.div_ceil(CHUNK);
    let (sum, sum_sq) = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(chunk);
            let count = CHUNK.min(requests - chunk * CHUNK);
            let mut s = 0.0;
            let mut s2 = 0.0;
            for _ in 0..count {
                let j = file_cdf.sample(&mut rng);
                let d = cov_cdf.sample(&mut rng) as u64 + 1;
                let backhaul = n.saturating_sub(d * placement.m[j] as u64);
                let frac = backhaul as f64 / n as f64;
                s += frac;
                s2 += frac * frac;
            }
            (s, s2)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let mean = sum / requests as f64;
    let var = (sum_sq / requests as f64 - mean * mean).max(0.0);
    let stderr = (var / requests as f64).sqrt();

    // Backhaul-eavesdropper accounting on one wiretapped link.
    let s1_intercepted = match cfg.mode {
        RequestMode::Expected => expected_link_interception(placement, p, gamma, cfg),
        RequestMode::Stochastic => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(LINK_SEED_OFFSET));
            rng.set_stream(0);
            stochastic_link_interception(placement, &file_cdf, &cov_cdf, cfg, &mut rng)
        }
    };

    // Cache-eavesdropper accounting at the worst-case coverage S.
    let s = gamma.max_coverage() as u64;
    let s2_intercepted: Vec<u64> = placement.m.iter().map(|&mj| mj as u64 * s).collect();

    let s1_breach = s1_intercepted.iter().any(|&c| c >= n);
    let s2_breach = s2_intercepted.iter().any(|&c| c >= n);
    Ok(SimReport {
        empirical_rate: mean,
        stderr,
        s1_intercepted,
        s2_intercepted,
        s1_breach,
        s2_breach,
    })
}

fn expected_link_interception(
    placement: &Placement,
    p: &PopularityProfile,
    gamma: &CoverageProfile,
    cfg: &SimConfig,
) -> Vec<u64> {
    let n = placement.n as u64;
    let q_req = cfg.requests_per_sbs as f64;
    p.probs()
        .iter()
        .enumerate()
        .map(|(j, &pj)| {
            let mut total = 0u64;
            for (i, &g) in gamma.gammas().iter().enumerate() {
                let d = (i + 1) as u64;
                let count = (q_req * g * pj).round() as u64;
                total += count * n.saturating_sub(d * placement.m[j] as u64);
            }
            total
        })
        .collect()
}

fn stochastic_link_interception(
    placement: &Placement,
    file_cdf: &Cdf,
    cov_cdf: &Cdf,
    cfg: &SimConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<u64> {
    let n = placement.n as u64;
    let mut intercepted = vec![0u64; placement.m.len()];
    for _ in 0..cfg.requests_per_sbs {
        let j = file_cdf.sample(rng);
        let d = cov_cdf.sample(rng) as u64 + 1;
        intercepted[j] += n.saturating_sub(d * placement.m[j] as u64);
    }
    intercepted
}

/// Fraction of independent delivery phases in which the backhaul
/// eavesdropper collects a full file on its link, under multinomial request
/// draws.
pub fn breach_probability_s1(
    placement: &Placement,
    p: &PopularityProfile,
    gamma: &CoverageProfile,
    cfg: &SimConfig,
    trials: u32,
) -> Result<f64, SimError> {
    validate(placement, p, cfg)?;
    if cfg.mode != RequestMode::Stochastic {
        return Err(SimError::ExpectedModeBreach);
    }
    let n = placement.n as u64;
    let file_cdf = Cdf::new(p.probs());
    let cov_cdf = Cdf::new(gamma.gammas());
    let breaches: u64 = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(LINK_SEED_OFFSET));
            rng.set_stream(trial + 1);
            let counts =
                stochastic_link_interception(placement, &file_cdf, &cov_cdf, cfg, &mut rng);
            u64::from(counts.iter().any(|&c| c >= n))
        })
        .sum();
    Ok(breaches as f64 / trials as f64)
}
