//! Domain types shared by every other module: the file library, request
//! popularity, the coverage-count distribution and cache placements.
//!
//! All types are immutable after construction and validated on entry, so the
//! rest of the crate can assume well-formed inputs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default number of fragments a file is split into.
pub const DEFAULT_FRAGMENTS: u32 = 1000;

/// Compensated summation; keeps the error independent of length so the
/// normalization tolerances hold up to 10^6 files.
pub(crate) fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut carry = 0.0;
    for v in values {
        let y = v - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Tolerance on `sum(p) == 1` for popularity profiles.
pub const POPULARITY_SUM_TOL: f64 = 1e-12;

/// Tolerance on `sum(gamma) == 1` for coverage profiles.
pub const COVERAGE_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("library must contain at least one file")]
    EmptyLibrary,
    #[error("fragment count must be at least 1")]
    NoFragments,
    #[error("zipf exponent must be finite and non-negative, got {0}")]
    BadZipfExponent(f64),
    #[error("file probabilities must be positive and finite, p[{index}] = {value}")]
    BadProbability { index: usize, value: f64 },
    #[error("file probabilities must sum to 1 within {POPULARITY_SUM_TOL}, got {0}")]
    UnnormalizedPopularity(f64),
    #[error("coverage probabilities must be non-negative and finite, gamma[{index}] = {value}")]
    BadCoverage { index: usize, value: f64 },
    #[error("coverage probabilities must sum to 1 within {COVERAGE_SUM_TOL}, got {0}")]
    UnnormalizedCoverage(f64),
    #[error("coverage profile must have at least one entry")]
    EmptyCoverage,
    #[error("cached fraction out of range, q[{index}] = {value}")]
    BadFraction { index: usize, value: f64 },
}

/// The file library held by the macro base station.
///
/// `file_bits` is carried as metadata only; all rate math is expressed as a
/// fraction of one file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Library {
    /// Number of files.
    pub n_files: usize,
    /// Size of each file in bits (metadata, never enters rate math).
    pub file_bits: u64,
    /// Fragments per file; packet counts are expressed out of this.
    pub fragments: u32,
}

impl Library {
    pub fn new(n_files: usize, file_bits: u64) -> Result<Self, ModelError> {
        Self::with_fragments(n_files, file_bits, DEFAULT_FRAGMENTS)
    }

    pub fn with_fragments(
        n_files: usize,
        file_bits: u64,
        fragments: u32,
    ) -> Result<Self, ModelError> {
        if n_files == 0 {
            return Err(ModelError::EmptyLibrary);
        }
        if fragments == 0 {
            return Err(ModelError::NoFragments);
        }
        Ok(Library {
            n_files,
            file_bits,
            fragments,
        })
    }
}

/// File-request probability vector over the library.
///
/// Entries are strictly positive and sum to one. Index 0 is the most popular
/// file when built from [`PopularityProfile::zipf`], but arbitrary positive
/// profiles are accepted and no ordering is assumed elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct PopularityProfile {
    p: Vec<f64>,
}

impl PopularityProfile {
    pub fn new(p: Vec<f64>) -> Result<Self, ModelError> {
        if p.is_empty() {
            return Err(ModelError::EmptyLibrary);
        }
        for (index, &value) in p.iter().enumerate() {
            if value <= 0.0 || !value.is_finite() {
                return Err(ModelError::BadProbability { index, value });
            }
        }
        let sum = kahan_sum(p.iter().copied());
        if (sum - 1.0).abs() > POPULARITY_SUM_TOL {
            return Err(ModelError::UnnormalizedPopularity(sum));
        }
        Ok(PopularityProfile { p })
    }

    /// Zipf profile: `p_j = j^-alpha / sum_i i^-alpha`, `j = 1..=n`.
    ///
    /// `alpha = 0` is the uniform distribution.
    pub fn zipf(n: usize, alpha: f64) -> Result<Self, ModelError> {
        if n == 0 {
            return Err(ModelError::EmptyLibrary);
        }
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(ModelError::BadZipfExponent(alpha));
        }
        let weights: Vec<f64> = (1..=n).map(|j| (j as f64).powf(-alpha)).collect();
        let total = kahan_sum(weights.iter().copied());
        Ok(PopularityProfile {
            p: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn uniform(n: usize) -> Result<Self, ModelError> {
        Self::zipf(n, 0.0)
    }

    pub fn probs(&self) -> &[f64] {
        &self.p
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// `eta = sum_j 1/p_j`, the aggregate entering the minimum cache-size
    /// threshold for the backhaul-eavesdropper scenario.
    ///
    /// Always `>= n^2`, with equality iff the profile is uniform.
    pub fn eta(&self) -> f64 {
        self.p.iter().map(|&pj| 1.0 / pj).sum()
    }
}

/// Distribution of the number of SBSs covering a user, conditioned on the
/// user being covered at all.
///
/// `gamma[d - 1]` is the probability of being covered by exactly `d` SBSs,
/// `d = 1..=max_coverage()`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageProfile {
    gamma: Vec<f64>,
}

impl CoverageProfile {
    pub fn new(gamma: Vec<f64>) -> Result<Self, ModelError> {
        if gamma.is_empty() {
            return Err(ModelError::EmptyCoverage);
        }
        for (index, &value) in gamma.iter().enumerate() {
            if value < 0.0 || !value.is_finite() {
                return Err(ModelError::BadCoverage { index, value });
            }
        }
        let sum: f64 = gamma.iter().sum();
        if (sum - 1.0).abs() > COVERAGE_SUM_TOL {
            return Err(ModelError::UnnormalizedCoverage(sum));
        }
        Ok(CoverageProfile { gamma })
    }

    /// Degenerate profile where every user is covered by exactly one SBS.
    pub fn single() -> Self {
        CoverageProfile { gamma: vec![1.0] }
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gamma
    }

    /// Maximum number of SBSs that can cover one user (`S`).
    pub fn max_coverage(&self) -> u32 {
        self.gamma.len() as u32
    }

    /// `sum_d d * gamma_d`, the mean coverage count.
    pub fn mean_coverage(&self) -> f64 {
        self.gamma
            .iter()
            .enumerate()
            .map(|(i, &g)| (i + 1) as f64 * g)
            .sum()
    }
}

/// Threat model for the delivery phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    /// No eavesdropper; the unconstrained placement problem.
    NoSecrecy,
    /// Backhaul eavesdropper wiretapping one MBS-to-SBS link carrying
    /// `requests_per_sbs` requests during the delivery phase.
    S1 { requests_per_sbs: u32 },
    /// Cache eavesdropper reading every cache within its coverage range.
    S2,
}

/// A scenario together with the margin used to close the strict secrecy
/// inequalities at the continuous level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    /// Margin (in units of cached fraction) by which strict bounds are
    /// tightened so that the optimum of the closed problem is strictly
    /// feasible for the open one.
    pub epsilon_sec: f64,
}

/// Default strictness margin for closing open bound constraints.
pub const DEFAULT_EPSILON_SEC: f64 = 1e-9;

impl ScenarioSpec {
    pub fn new(scenario: Scenario) -> Self {
        ScenarioSpec {
            scenario,
            epsilon_sec: DEFAULT_EPSILON_SEC,
        }
    }

    pub fn no_secrecy() -> Self {
        Self::new(Scenario::NoSecrecy)
    }

    pub fn s1(requests_per_sbs: u32) -> Self {
        Self::new(Scenario::S1 { requests_per_sbs })
    }

    pub fn s2() -> Self {
        Self::new(Scenario::S2)
    }

    pub fn label(&self) -> &'static str {
        match self.scenario {
            Scenario::NoSecrecy => "no_secrecy",
            Scenario::S1 { .. } => "s1",
            Scenario::S2 => "s2",
        }
    }
}

/// Per-SBS cache placement: the cached fraction `q_j` of each file together
/// with the integer packet counts `m_j` (out of `n` fragments) and the total
/// number of encoded packets `k_j = N_SBS * m_j` created by the MBS.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    /// Cached fraction per file, `0 <= q_j <= 1`.
    pub q: Vec<f64>,
    /// Encoded packets of each file stored per SBS.
    pub m: Vec<u32>,
    /// Total encoded packets created per file, `k_j = n_sbs * m_j`.
    pub k: Vec<u64>,
    /// Fragments per file.
    pub n: u32,
    /// Number of SBSs the placement was built for.
    pub n_sbs: u32,
    /// True once integer packet counts were produced by a scenario-aware
    /// quantization (the delivery simulator requires this).
    pub quantized: bool,
}

impl Placement {
    /// Builds a placement from continuous fractions, deriving `m_j` by plain
    /// truncation. The result is not scenario-quantized; use
    /// [`crate::optimizer::quantize`] before simulating.
    pub fn from_continuous(
        q: Vec<f64>,
        n: u32,
        n_sbs: u32,
    ) -> Result<Self, ModelError> {
        for (index, &value) in q.iter().enumerate() {
            if !(-1e-12..=1.0 + 1e-12).contains(&value) || !value.is_finite() {
                return Err(ModelError::BadFraction { index, value });
            }
        }
        let m: Vec<u32> = q
            .iter()
            .map(|&qj| ((qj * n as f64 + 1e-9).floor() as u32).min(n))
            .collect();
        let k = m.iter().map(|&mj| mj as u64 * n_sbs as u64).collect();
        Ok(Placement {
            q,
            m,
            k,
            n,
            n_sbs,
            quantized: false,
        })
    }

    pub fn n_files(&self) -> usize {
        self.q.len()
    }

    /// Sum of cached fractions, i.e. cache occupancy in files.
    pub fn budget_used(&self) -> f64 {
        self.q.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zipf_single_file() {
        let p = PopularityProfile::zipf(1, 0.7).unwrap();
        assert_eq!(p.probs(), &[1.0]);
    }

    #[test]
    fn zipf_zero_alpha_is_uniform() {
        let p = PopularityProfile::zipf(4, 0.0).unwrap();
        assert_eq!(p.probs(), &[0.25, 0.25, 0.25, 0.25]);
    }

    #[test]
    fn zipf_two_files_alpha_one() {
        let p = PopularityProfile::zipf(2, 1.0).unwrap();
        assert!((p.probs()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((p.probs()[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn zipf_rejects_bad_inputs() {
        assert!(PopularityProfile::zipf(0, 0.7).is_err());
        assert!(PopularityProfile::zipf(10, f64::NAN).is_err());
        assert!(PopularityProfile::zipf(10, f64::INFINITY).is_err());
        assert!(PopularityProfile::zipf(10, -0.1).is_err());
    }

    #[test]
    fn zipf_sums_to_one_large() {
        for &(n, alpha) in &[(1000usize, 0.7), (100_000, 1.5), (1_000_000, 3.0), (1_000_000, 0.0)]
        {
            let p = PopularityProfile::zipf(n, alpha).unwrap();
            let sum = kahan_sum(p.probs().iter().copied());
            assert!((sum - 1.0).abs() <= POPULARITY_SUM_TOL, "n={n} alpha={alpha} sum={sum}");
        }
    }

    #[test]
    fn zipf_head_mass_grows_with_alpha() {
        let mut last = 0.0;
        for alpha in [0.0, 0.4, 0.7, 1.0, 2.0, 3.0] {
            let p = PopularityProfile::zipf(100, alpha).unwrap();
            assert!(p.probs()[0] >= last);
            last = p.probs()[0];
        }
    }

    #[test]
    fn eta_uniform() {
        let p = PopularityProfile::uniform(10).unwrap();
        assert!((p.eta() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn eta_two_thirds() {
        let p = PopularityProfile::new(vec![2.0 / 3.0, 1.0 / 3.0]).unwrap();
        assert!((p.eta() - 4.5).abs() < 1e-12);
    }

    #[test]
    fn eta_matches_direct_summation() {
        let p = PopularityProfile::zipf(200, 0.7).unwrap();
        // Independent route: recompute the unnormalized weights and sum their
        // reciprocals scaled by the normalizer.
        let h: f64 = (1..=200).map(|j| (j as f64).powf(-0.7)).sum();
        let expect: f64 = (1..=200).map(|j| h * (j as f64).powf(0.7)).sum();
        assert!((p.eta() - expect).abs() / expect < 1e-12);
    }

    #[test]
    fn eta_at_least_n_squared() {
        // Cauchy-Schwarz: sum(1/p) >= n^2 with equality iff uniform.
        let profiles = [
            PopularityProfile::zipf(50, 0.9).unwrap(),
            PopularityProfile::new(vec![0.7, 0.2, 0.1]).unwrap(),
            PopularityProfile::uniform(17).unwrap(),
        ];
        for p in &profiles {
            let n = p.len() as f64;
            assert!(p.eta() >= n * n - 1e-6);
        }
        let u = PopularityProfile::uniform(17).unwrap();
        assert!((u.eta() - 17.0 * 17.0).abs() < 1e-6);
    }

    #[test]
    fn popularity_rejects_invalid() {
        assert!(PopularityProfile::new(vec![]).is_err());
        assert!(PopularityProfile::new(vec![0.5, 0.0, 0.5]).is_err());
        assert!(PopularityProfile::new(vec![0.5, 0.4]).is_err());
        assert!(PopularityProfile::new(vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn coverage_profile_validation() {
        assert!(CoverageProfile::new(vec![]).is_err());
        assert!(CoverageProfile::new(vec![0.5, 0.6]).is_err());
        assert!(CoverageProfile::new(vec![1.1, -0.1]).is_err());
        let g = CoverageProfile::new(vec![0.25, 0.25, 0.5]).unwrap();
        assert_eq!(g.max_coverage(), 3);
        assert!((g.mean_coverage() - 2.25).abs() < 1e-12);
    }

    #[test]
    fn placement_from_continuous() {
        let pl = Placement::from_continuous(vec![1.0, 0.0, 0.5], 1000, 300).unwrap();
        assert_eq!(pl.m, vec![1000, 0, 500]);
        assert_eq!(pl.k, vec![300_000, 0, 150_000]);
        assert!(!pl.quantized);
        assert!(Placement::from_continuous(vec![1.2], 1000, 300).is_err());
    }
}
