//! Secrecy checks and cache-size thresholds for the two eavesdropper
//! models.
//!
//! An eavesdropper defeats the scheme only by collecting at least `n`
//! packets of some file; everything below that reveals nothing usable. The
//! checks here operate on any placement, whether it came from the optimizer
//! or not, and report a signed per-file margin: positive means strictly
//! secure, zero or negative means the file is compromised (equality counts
//! as insecure because all the underlying conditions are strict).

use crate::model::{CoverageProfile, PopularityProfile, ScenarioSpec};

/// Outcome of a secrecy check.
#[derive(Debug, Clone, PartialEq)]
pub struct SecrecyReport {
    /// True iff every per-file margin is strictly positive.
    pub secure: bool,
    /// Signed slack per file. Vacuous constraints (active clamp in the
    /// backhaul-eavesdropper bound) are reported as `+inf` so that "secure
    /// with an empty cache" is representable.
    pub per_file_margin: Vec<f64>,
    /// Files with margin <= 0.
    pub binding_files: Vec<usize>,
    pub scenario: ScenarioSpec,
}

impl SecrecyReport {
    fn from_margins(per_file_margin: Vec<f64>, scenario: ScenarioSpec) -> Self {
        let binding_files: Vec<usize> = per_file_margin
            .iter()
            .enumerate()
            .filter(|(_, &m)| m <= 0.0)
            .map(|(j, _)| j)
            .collect();
        SecrecyReport {
            secure: binding_files.is_empty(),
            per_file_margin,
            binding_files,
            scenario,
        }
    }

    /// CSV rows `file,margin,binding` with header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("file,margin,binding\n");
        for (j, &m) in self.per_file_margin.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", j + 1, m, m <= 0.0));
        }
        out
    }
}

/// General backhaul-eavesdropper check against the expected number of
/// packets intercepted on one wiretapped MBS-to-SBS link carrying
/// `requests_per_sbs` requests.
///
/// For each file the expected interception is
/// `P_j = sum_d Q gamma_d p_j n (1 - min(1, d q_j))`; the placement is
/// secure iff `P_j < n` for every file. The margin is `(n - P_j) / n`.
pub fn check_s1_general(
    q: &[f64],
    n: u32,
    p: &PopularityProfile,
    gamma: &CoverageProfile,
    requests_per_sbs: u32,
) -> SecrecyReport {
    let nf = n as f64;
    let q_req = requests_per_sbs as f64;
    let margins = q
        .iter()
        .zip(p.probs())
        .map(|(&qj, &pj)| {
            let mut intercepted = 0.0;
            for (i, &g) in gamma.gammas().iter().enumerate() {
                let d = (i + 1) as f64;
                intercepted += q_req * g * pj * nf * (1.0 - (d * qj).min(1.0));
            }
            (nf - intercepted) / nf
        })
        .collect();
    SecrecyReport::from_margins(margins, ScenarioSpec::s1(requests_per_sbs))
}

/// Worst-case backhaul-eavesdropper check, i.e. [`check_s1_general`]
/// specialized to every user reaching exactly one SBS.
///
/// Secure iff `q_j > (1 - 1/(Q p_j))^+` for every file; the margin is the
/// distance to that threshold. When the clamp is active the constraint is
/// vacuous and the margin is `+inf`.
pub fn check_s1_worstcase(
    q: &[f64],
    p: &PopularityProfile,
    requests_per_sbs: u32,
) -> SecrecyReport {
    let q_req = requests_per_sbs as f64;
    let margins = q
        .iter()
        .zip(p.probs())
        .map(|(&qj, &pj)| {
            let threshold = 1.0 - 1.0 / (q_req * pj);
            if threshold <= 0.0 {
                f64::INFINITY
            } else {
                qj - threshold
            }
        })
        .collect();
    SecrecyReport::from_margins(margins, ScenarioSpec::s1(requests_per_sbs))
}

/// Cache-eavesdropper check: a malicious user within range of
/// `max_coverage` SBSs reads `m_j * S` distinct packets of each file, so
/// the placement is secure iff `q_j < 1/S` for every file. The margin is
/// `1/S - q_j`.
pub fn check_s2(q: &[f64], max_coverage: u32) -> SecrecyReport {
    let cap = 1.0 / max_coverage as f64;
    let margins = q.iter().map(|&qj| cap - qj).collect();
    SecrecyReport::from_margins(margins, ScenarioSpec::s2())
}

/// Minimum cache size for the backhaul-eavesdropper problem to be feasible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CacheSizeThreshold {
    /// Tight threshold: sum of the per-file lower bounds,
    /// `sum_j (1 - 1/(Q p_j))^+`.
    pub tight: f64,
    /// Unclamped bound `N - eta/Q` obtained by summing the per-file
    /// inequalities without the clamp; always `<= tight`, kept as a
    /// closed-form reference.
    pub unclamped: f64,
}

/// Feasibility threshold on the cache size under the backhaul eavesdropper:
/// the secure problem admits a placement iff `M` exceeds the tight value.
pub fn min_cache_size_s1(p: &PopularityProfile, requests_per_sbs: u32) -> CacheSizeThreshold {
    let q_req = requests_per_sbs as f64;
    let tight = p
        .probs()
        .iter()
        .map(|&pj| (1.0 - 1.0 / (q_req * pj)).max(0.0))
        .sum();
    let unclamped = p.len() as f64 - p.eta() / q_req;
    CacheSizeThreshold { tight, unclamped }
}

/// Strict upper bound `N / S` on the cache size that the cache-eavesdropper
/// constraints can absorb.
pub fn max_cache_size_s2(n_files: usize, max_coverage: u32) -> f64 {
    n_files as f64 / max_coverage as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Scenario;
    use crate::optimizer::{scenario_bounds, solve_placement};

    fn pop(p: &[f64]) -> PopularityProfile {
        PopularityProfile::new(p.to_vec()).unwrap()
    }

    #[test]
    fn s1_general_full_cache_is_secure() {
        let p = pop(&[0.8, 0.2]);
        let g = CoverageProfile::single();
        let rep = check_s1_general(&[1.0, 1.0], 1000, &p, &g, 100);
        assert!(rep.secure);
        for &m in &rep.per_file_margin {
            assert_eq!(m, 1.0); // nothing crosses the backhaul
        }
    }

    #[test]
    fn s1_general_empty_cache() {
        let p = pop(&[0.8, 0.2]);
        let g = CoverageProfile::single();
        // P_j = Q p_j n; secure iff Q p_j < 1 for all j.
        let rep = check_s1_general(&[0.0, 0.0], 1000, &p, &g, 1);
        assert!(rep.secure);
        let rep = check_s1_general(&[0.0, 0.0], 1000, &p, &g, 2);
        assert!(!rep.secure);
        assert_eq!(rep.binding_files, vec![0]);
    }

    #[test]
    fn s1_general_boundary_is_insecure() {
        let p = pop(&[0.8, 0.2]);
        let g = CoverageProfile::single();
        let rep = check_s1_general(&[1.0, 0.5], 1000, &p, &g, 10);
        // P = [0, 1000]; file 2 margin exactly 0.
        assert!(!rep.secure);
        assert_eq!(rep.per_file_margin[0], 1.0);
        assert!(rep.per_file_margin[1].abs() < 1e-12);
        assert_eq!(rep.binding_files, vec![1]);
    }

    #[test]
    fn s1_worstcase_boundary_and_strict() {
        let p = pop(&[0.8, 0.2]);
        let rep = check_s1_worstcase(&[1.0, 0.5], &p, 10);
        assert!(!rep.secure);
        assert!((rep.per_file_margin[0] - 0.125).abs() < 1e-12);
        assert!(rep.per_file_margin[1].abs() < 1e-12);
        let rep = check_s1_worstcase(&[1.0, 0.51], &p, 10);
        assert!(rep.secure);
    }

    #[test]
    fn s1_worstcase_vacuous_clamp() {
        let p = pop(&[0.5, 0.5]);
        // Q p_j = 1 for both files: the threshold clamps, empty cache secure.
        let rep = check_s1_worstcase(&[0.0, 0.0], &p, 2);
        assert!(rep.secure);
        assert!(rep.per_file_margin.iter().all(|m| m.is_infinite()));
    }

    #[test]
    fn s1_general_agrees_with_worstcase_on_single_coverage() {
        let g = CoverageProfile::single();
        let cases: &[(&[f64], &[f64], u32)] = &[
            (&[0.8, 0.2], &[0.9, 0.4], 10),
            (&[0.8, 0.2], &[0.9, 0.6], 10),
            (&[0.6, 0.3, 0.1], &[0.0, 0.0, 0.0], 3),
            (&[0.6, 0.3, 0.1], &[0.5, 0.1, 0.0], 20),
            (&[0.25, 0.25, 0.25, 0.25], &[0.1, 0.2, 0.3, 0.4], 4),
        ];
        for &(probs, q, q_req) in cases {
            let p = pop(probs);
            let a = check_s1_general(q, 1000, &p, &g, q_req);
            let b = check_s1_worstcase(q, &p, q_req);
            assert_eq!(a.secure, b.secure, "p={probs:?} q={q:?} Q={q_req}");
        }
    }

    #[test]
    fn s2_examples() {
        assert!(check_s2(&[0.0, 0.0], 4).secure);
        let boundary = check_s2(&[0.5, 0.1], 2);
        assert!(!boundary.secure);
        assert_eq!(boundary.binding_files, vec![0]);
        let rep = check_s2(&[0.2; 4], 4);
        assert!(rep.secure);
        for &m in &rep.per_file_margin {
            assert!((m - 0.05).abs() < 1e-12);
        }
    }

    #[test]
    fn s1_threshold_uniform() {
        let p = PopularityProfile::uniform(10).unwrap();
        let t = min_cache_size_s1(&p, 20);
        assert!((t.tight - 5.0).abs() < 1e-9);
        assert!((t.unclamped - 5.0).abs() < 1e-9);
        // Q p_j = 1: every clamp active.
        let t0 = min_cache_size_s1(&p, 10);
        assert_eq!(t0.tight, 0.0);
        assert!(t0.unclamped <= t0.tight + 1e-9);
    }

    #[test]
    fn s1_threshold_matches_summation_oracle() {
        let p = PopularityProfile::zipf(200, 0.7).unwrap();
        let t = min_cache_size_s1(&p, 100);
        let mut expect = 0.0;
        for &pj in p.probs() {
            let v = 1.0 - 1.0 / (100.0 * pj);
            if v > 0.0 {
                expect += v;
            }
        }
        assert!((t.tight - expect).abs() < 1e-12);
        assert!(t.tight >= t.unclamped);
        assert!(t.tight > 0.0);
    }

    #[test]
    fn s1_threshold_monotone_in_requests() {
        let p = PopularityProfile::zipf(100, 0.7).unwrap();
        let mut last = 0.0;
        for q_req in [10, 50, 100, 200, 500, 1000] {
            let t = min_cache_size_s1(&p, q_req).tight;
            assert!(t >= last - 1e-12);
            last = t;
        }
    }

    #[test]
    fn s1_threshold_grows_as_popularity_flattens() {
        // Smaller skew spreads requests, raising the threshold (as long as
        // the most popular files stay above the clamp).
        let q_req = 400;
        let mut last = 0.0;
        for alpha in [1.2, 0.9, 0.6, 0.3, 0.0] {
            let p = PopularityProfile::zipf(100, alpha).unwrap();
            let t = min_cache_size_s1(&p, q_req).tight;
            assert!(t >= last - 1e-12, "alpha={alpha}: {t} < {last}");
            last = t;
        }
    }

    #[test]
    fn s2_threshold() {
        assert_eq!(max_cache_size_s2(200, 4), 50.0);
        assert_eq!(max_cache_size_s2(200, 1), 200.0);
    }

    #[test]
    fn threshold_matches_solver_feasibility() {
        let p = PopularityProfile::zipf(50, 0.8).unwrap();
        let g = CoverageProfile::single();
        let spec = ScenarioSpec::s1(100);
        let b = scenario_bounds(&spec, &p, 1);
        let t = min_cache_size_s1(&p, 100).tight;
        let eps_total = spec.epsilon_sec * p.len() as f64;
        let below = solve_placement(&p, &g, t - 0.01, &b).unwrap();
        assert!(!below.feasible);
        let above = solve_placement(&p, &g, t + eps_total + 0.01, &b).unwrap();
        assert!(above.feasible);
    }

    #[test]
    fn feasible_solutions_pass_their_checks() {
        let p = PopularityProfile::zipf(20, 0.7).unwrap();
        let g = CoverageProfile::new(vec![0.2, 0.5, 0.3]).unwrap();
        for spec in [ScenarioSpec::s1(100), ScenarioSpec::s2()] {
            let b = scenario_bounds(&spec, &p, g.max_coverage());
            let cache_size = match spec.scenario {
                Scenario::S1 { requests_per_sbs } => {
                    min_cache_size_s1(&p, requests_per_sbs).tight + 1.0
                }
                _ => 5.0,
            };
            let sol = solve_placement(&p, &g, cache_size, &b).unwrap();
            assert!(sol.feasible);
            let rep = match spec.scenario {
                Scenario::S1 { requests_per_sbs } => {
                    check_s1_worstcase(&sol.q, &p, requests_per_sbs)
                }
                Scenario::S2 => check_s2(&sol.q, g.max_coverage()),
                Scenario::NoSecrecy => unreachable!(),
            };
            assert!(rep.secure, "{:?}", spec.scenario);
            for &m in &rep.per_file_margin {
                assert!(m >= spec.epsilon_sec / 2.0);
            }
        }
    }
}
