//! Backhaul-rate objective and exact solvers for the three placement
//! problems.
//!
//! The objective `R(q) = sum_d sum_j gamma_d p_j (1 - min(1, d q_j))` is
//! separable across files; each per-file cost is convex, decreasing and
//! piecewise linear with breakpoints at `q = 1/d`. Minimizing under the
//! budget `sum q_j = M` and per-file boxes therefore reduces to a greedy
//! allocation: cut every feasible interval into linear pieces, sort the
//! pieces by marginal rate reduction and pour the remaining budget into them
//! in that order. Greedy on sorted slopes is exact for separable convex
//! piecewise-linear minimization with one budget constraint and boxes, so no
//! general-purpose LP machinery is involved.

use thiserror::Error;

use crate::model::{
    CoverageProfile, ModelError, Placement, PopularityProfile, Scenario, ScenarioSpec,
};

/// Tolerance on budget feasibility comparisons.
pub const BUDGET_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error("cached fraction out of [0,1]: q[{index}] = {value}")]
    FractionOutOfRange { index: usize, value: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(&'static str),
    #[error("invalid bounds at file {index}: l = {lower}, u = {upper}")]
    InvalidBounds {
        index: usize,
        lower: f64,
        upper: f64,
    },
    #[error("cache budget must be non-negative, got {0}")]
    NegativeBudget(f64),
    #[error("grid oracle supports at most 4 files, got {0}")]
    OracleTooManyFiles(usize),
    #[error("grid oracle step must be in (0, 0.05], got {0}")]
    OracleBadStep(f64),
    #[error(
        "quantization cannot satisfy the packet budget: need {needed} packets, budget {budget}"
    )]
    QuantizeBudget { needed: u64, budget: u64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Per-file feasible interval `[l_j, u_j]` for the cached fraction, as
/// induced by a threat scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub scenario: ScenarioSpec,
}

impl Bounds {
    fn validate(&self, n_files: usize) -> Result<(), OptimizerError> {
        if self.lower.len() != n_files || self.upper.len() != n_files {
            return Err(OptimizerError::DimensionMismatch("bounds length"));
        }
        for index in 0..n_files {
            let lower = self.lower[index];
            let upper = self.upper[index];
            if !(0.0..=1.0).contains(&lower)
                || !(0.0..=1.0).contains(&upper)
                || lower > upper
            {
                return Err(OptimizerError::InvalidBounds {
                    index,
                    lower,
                    upper,
                });
            }
        }
        Ok(())
    }
}

/// Why a solve came back infeasible.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfeasibleReason {
    /// The per-file lower bounds alone exceed the cache budget (the
    /// backhaul-eavesdropper regime below the critical cache size).
    LowerBoundsExceedBudget,
}

/// Outcome of a placement solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    /// Cached fraction per file.
    pub q: Vec<f64>,
    /// Backhaul rate of `q`.
    pub rate: f64,
    pub feasible: bool,
    pub infeasible_reason: Option<InfeasibleReason>,
    /// Budget actually allocated, `sum(q)`.
    pub active_budget: f64,
    /// Per-file contribution to the rate.
    pub per_file_rate: Vec<f64>,
}

impl SolveResult {
    /// CSV dump of the per-file solution: index, popularity, bounds, cached
    /// fraction, packets and rate contribution.
    pub fn to_csv(&self, p: &PopularityProfile, bounds: &Bounds, placement: &Placement) -> String {
        let mut out = String::from("file,p,l,u,q,m,rate_contrib\n");
        for j in 0..self.q.len() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                j + 1,
                p.probs()[j],
                bounds.lower[j],
                bounds.upper[j],
                self.q[j],
                placement.m[j],
                self.per_file_rate[j]
            ));
        }
        out
    }
}

fn per_file_rate_unchecked(qj: f64, pj: f64, gamma: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (i, &g) in gamma.iter().enumerate() {
        let d = (i + 1) as f64;
        acc += g * (1.0 - (d * qj).min(1.0));
    }
    pj * acc
}

/// Average backhaul rate of placement `q`:
/// `sum_d sum_j gamma_d p_j (1 - min(1, d q_j))`, a value in `[0, 1]`.
pub fn backhaul_rate(
    q: &[f64],
    p: &PopularityProfile,
    gamma: &CoverageProfile,
) -> Result<f64, OptimizerError> {
    if q.len() != p.len() {
        return Err(OptimizerError::DimensionMismatch("q vs popularity"));
    }
    for (index, &value) in q.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(OptimizerError::FractionOutOfRange { index, value });
        }
    }
    Ok(q.iter()
        .zip(p.probs())
        .map(|(&qj, &pj)| per_file_rate_unchecked(qj, pj, gamma.gammas()))
        .sum())
}

/// Per-file box constraints for a scenario.
///
/// * no secrecy: `0 <= q_j <= 1`;
/// * backhaul eavesdropper: `(1 - 1/(Q p_j))^+ < q_j <= 1`, the strict lower
///   bound closed by adding `epsilon_sec`;
/// * cache eavesdropper: `0 <= q_j < 1/S`, the strict upper bound closed by
///   subtracting `epsilon_sec`.
pub fn scenario_bounds(
    spec: &ScenarioSpec,
    p: &PopularityProfile,
    max_coverage: u32,
) -> Bounds {
    let n = p.len();
    let (lower, upper) = match spec.scenario {
        Scenario::NoSecrecy => (vec![0.0; n], vec![1.0; n]),
        Scenario::S1 { requests_per_sbs } => {
            let q_req = requests_per_sbs as f64;
            let lower = p
                .probs()
                .iter()
                .map(|&pj| {
                    let threshold = (1.0 - 1.0 / (q_req * pj)).max(0.0);
                    if threshold > 0.0 {
                        (threshold + spec.epsilon_sec).min(1.0)
                    } else {
                        0.0
                    }
                })
                .collect();
            (lower, vec![1.0; n])
        }
        Scenario::S2 => {
            let cap = (1.0 / max_coverage as f64 - spec.epsilon_sec).max(0.0);
            (vec![0.0; n], vec![cap; n])
        }
    };
    Bounds {
        lower,
        upper,
        scenario: *spec,
    }
}

/// One linear piece of a per-file cost curve.
struct Piece {
    file: usize,
    start: f64,
    width: f64,
    /// Rate reduction per unit of budget spent on this piece.
    slope: f64,
}

/// Exact minimizer of the backhaul rate under `sum q_j = min(M, sum u_j)`
/// and the per-file boxes.
///
/// When the lower bounds alone exceed the budget the problem is infeasible;
/// the result then falls back to the empty placement (`q = 0`, rate 1) with
/// the feasibility flag cleared, which is what the network does below the
/// critical cache size in the backhaul-eavesdropper scenario: an unusable
/// cache stays empty.
pub fn solve_placement(
    p: &PopularityProfile,
    gamma: &CoverageProfile,
    cache_size: f64,
    bounds: &Bounds,
) -> Result<SolveResult, OptimizerError> {
    let n = p.len();
    bounds.validate(n)?;
    if cache_size < 0.0 || cache_size.is_nan() {
        return Err(OptimizerError::NegativeBudget(cache_size));
    }
    let sum_l: f64 = bounds.lower.iter().sum();
    let sum_u: f64 = bounds.upper.iter().sum();

    if sum_l > cache_size + BUDGET_TOL {
        // Unusable cache stays empty; the rate is exactly one file per
        // request regardless of round-off in the coverage profile.
        return Ok(SolveResult {
            q: vec![0.0; n],
            rate: 1.0,
            feasible: false,
            infeasible_reason: Some(InfeasibleReason::LowerBoundsExceedBudget),
            active_budget: 0.0,
            per_file_rate: p.probs().to_vec(),
        });
    }

    let q = if sum_u <= cache_size {
        // The boxes cannot absorb the whole budget; fill them.
        bounds.upper.clone()
    } else {
        greedy_fill(p, gamma, cache_size, bounds)
    };

    let per_file_rate: Vec<f64> = q
        .iter()
        .zip(p.probs())
        .map(|(&qj, &pj)| per_file_rate_unchecked(qj, pj, gamma.gammas()))
        .collect();
    Ok(SolveResult {
        rate: per_file_rate.iter().sum(),
        active_budget: q.iter().sum(),
        q,
        feasible: true,
        infeasible_reason: None,
        per_file_rate,
    })
}

fn per_file_rate_sum(q: &[f64], p: &PopularityProfile, gamma: &CoverageProfile) -> f64 {
    q.iter()
        .zip(p.probs())
        .map(|(&qj, &pj)| per_file_rate_unchecked(qj, pj, gamma.gammas()))
        .sum()
}

fn greedy_fill(
    p: &PopularityProfile,
    gamma: &CoverageProfile,
    cache_size: f64,
    bounds: &Bounds,
) -> Vec<f64> {
    let gammas = gamma.gammas();
    let s = gammas.len();
    // Breakpoints of the per-file cost, ascending: 1/S < ... < 1/2 < 1.
    let breakpoints: Vec<f64> = (1..=s).rev().map(|d| 1.0 / d as f64).collect();

    let mut pieces: Vec<Piece> = Vec::new();
    for (file, (&lj, &uj)) in bounds.lower.iter().zip(&bounds.upper).enumerate() {
        if uj - lj <= 0.0 {
            continue;
        }
        let pj = p.probs()[file];
        let mut start = lj;
        for &b in breakpoints.iter().filter(|&&b| b > lj) {
            let end = b.min(uj);
            if end > start {
                pieces.push(Piece {
                    file,
                    start,
                    width: end - start,
                    slope: pj * segment_slope(start, end, gammas),
                });
                start = end;
            }
            if start >= uj {
                break;
            }
        }
        if start < uj {
            // Tail beyond the last breakpoint (possible only if u_j > 1,
            // excluded by validation; kept for robustness with u_j == 1).
            pieces.push(Piece {
                file,
                start,
                width: uj - start,
                slope: pj * segment_slope(start, uj, gammas),
            });
        }
    }

    // Steepest rate reduction first; ties resolved by file index then by
    // position so the output is deterministic and pieces of one file are
    // consumed in order.
    pieces.sort_by(|a, b| {
        b.slope
            .total_cmp(&a.slope)
            .then(a.file.cmp(&b.file))
            .then(a.start.total_cmp(&b.start))
    });

    let mut q = bounds.lower.clone();
    let mut budget = cache_size - bounds.lower.iter().sum::<f64>();
    for piece in &pieces {
        if budget <= 0.0 {
            break;
        }
        let take = piece.width.min(budget);
        q[piece.file] += take;
        budget -= take;
    }
    for (qj, &uj) in q.iter_mut().zip(&bounds.upper) {
        if *qj > uj {
            *qj = uj; // guard against accumulated round-off
        }
    }
    q
}

/// Magnitude of the cost slope on a linear segment `(start, end)` of the
/// coverage-weighted miss curve: the sum of `d * gamma_d` over the coverage
/// counts still unsaturated there.
fn segment_slope(start: f64, end: f64, gammas: &[f64]) -> f64 {
    let mid = 0.5 * (start + end);
    gammas
        .iter()
        .enumerate()
        .map(|(i, &g)| {
            let d = (i + 1) as f64;
            if d * mid < 1.0 {
                d * g
            } else {
                0.0
            }
        })
        .sum()
}

/// Exhaustive verification oracle: enumerates placements on a step grid and
/// returns the best rate found. Cost grows as `(1/step)^(N-1)`, so it is
/// restricted to tiny instances and test code.
pub fn grid_oracle_solve(
    p: &PopularityProfile,
    gamma: &CoverageProfile,
    cache_size: f64,
    bounds: &Bounds,
    step: f64,
) -> Result<SolveResult, OptimizerError> {
    let n = p.len();
    if n > 4 {
        return Err(OptimizerError::OracleTooManyFiles(n));
    }
    if !(step > 0.0 && step <= 0.05) {
        return Err(OptimizerError::OracleBadStep(step));
    }
    bounds.validate(n)?;
    if cache_size < 0.0 || cache_size.is_nan() {
        return Err(OptimizerError::NegativeBudget(cache_size));
    }
    let sum_l: f64 = bounds.lower.iter().sum();
    let sum_u: f64 = bounds.upper.iter().sum();
    if sum_l > cache_size + BUDGET_TOL {
        return Ok(SolveResult {
            q: vec![0.0; n],
            rate: 1.0,
            feasible: false,
            infeasible_reason: Some(InfeasibleReason::LowerBoundsExceedBudget),
            active_budget: 0.0,
            per_file_rate: p.probs().to_vec(),
        });
    }
    let target = cache_size.min(sum_u);

    // Enumerate the first N-1 coordinates on the grid; the last is fixed by
    // the budget and accepted if it lands inside its box.
    let mut best: Option<Vec<f64>> = None;
    let mut best_rate = f64::INFINITY;
    let mut q = vec![0.0; n];
    enumerate_grid(
        0,
        target,
        &mut q,
        bounds,
        step,
        &mut |candidate: &[f64]| {
            let rate = per_file_rate_sum(candidate, p, gamma);
            if rate < best_rate {
                best_rate = rate;
                best = Some(candidate.to_vec());
            }
        },
    );
    let q = best.unwrap_or_else(|| bounds.lower.clone());
    let per_file_rate: Vec<f64> = q
        .iter()
        .zip(p.probs())
        .map(|(&qj, &pj)| per_file_rate_unchecked(qj, pj, gamma.gammas()))
        .collect();
    Ok(SolveResult {
        rate: per_file_rate.iter().sum(),
        active_budget: q.iter().sum(),
        q,
        feasible: true,
        infeasible_reason: None,
        per_file_rate,
    })
}

fn enumerate_grid(
    dim: usize,
    remaining: f64,
    q: &mut Vec<f64>,
    bounds: &Bounds,
    step: f64,
    visit: &mut dyn FnMut(&[f64]),
) {
    let n = bounds.lower.len();
    if dim == n - 1 {
        // Last coordinate fixed by the budget.
        let qn = remaining;
        if qn >= bounds.lower[dim] - BUDGET_TOL && qn <= bounds.upper[dim] + BUDGET_TOL {
            q[dim] = qn.clamp(bounds.lower[dim], bounds.upper[dim]);
            visit(q);
        }
        return;
    }
    let lj = bounds.lower[dim];
    let uj = bounds.upper[dim];
    let steps = ((uj - lj) / step).floor() as usize;
    for k in 0..=steps + 1 {
        let qj = if k <= steps { lj + k as f64 * step } else { uj };
        if qj > uj + 1e-12 || qj > remaining + BUDGET_TOL {
            break;
        }
        q[dim] = qj.min(uj);
        enumerate_grid(dim + 1, remaining - q[dim], q, bounds, step, visit);
    }
}

/// Rounds a continuous solution to integer packet counts while preserving
/// secrecy strictness at integer scale.
///
/// * backhaul eavesdropper: every non-vacuous file gets at least the
///   smallest integer strictly above `n (1 - 1/(Q p_j))`, and the total is
///   rebalanced down to the packet budget `floor(M n)` if the round-ups
///   overshoot;
/// * cache eavesdropper: counts are capped at `ceil(n/S) - 1 < n/S`;
/// * no secrecy: plain truncation.
pub fn quantize(
    solution: &SolveResult,
    p: &PopularityProfile,
    max_coverage: u32,
    n: u32,
    n_sbs: u32,
    cache_size: f64,
    spec: &ScenarioSpec,
) -> Result<Placement, OptimizerError> {
    let nf = n as f64;
    let floor_q = |qj: f64| ((qj * nf + 1e-9).floor() as u32).min(n);
    let mut m: Vec<u32>;
    let mut min_packets = vec![0u32; solution.q.len()];

    match spec.scenario {
        Scenario::NoSecrecy => {
            m = solution.q.iter().map(|&qj| floor_q(qj)).collect();
        }
        Scenario::S2 => {
            let cap = (n as u64).div_ceil(max_coverage as u64).saturating_sub(1) as u32;
            m = solution.q.iter().map(|&qj| floor_q(qj).min(cap)).collect();
        }
        Scenario::S1 { requests_per_sbs } => {
            if !solution.feasible {
                // Empty-placement fallback stays empty at integer scale.
                m = vec![0; solution.q.len()];
            } else {
                let q_req = requests_per_sbs as f64;
                m = Vec::with_capacity(solution.q.len());
                for (&qj, &pj) in solution.q.iter().zip(p.probs()) {
                    let threshold = (1.0 - 1.0 / (q_req * pj)).max(0.0);
                    let mj = if threshold > 0.0 {
                        // Smallest integer strictly above n * threshold.
                        let min_m = ((nf * threshold).floor() as u32 + 1).min(n);
                        floor_q(qj).max(min_m)
                    } else {
                        floor_q(qj)
                    };
                    m.push(mj);
                }
                min_packets = p
                    .probs()
                    .iter()
                    .map(|&pj| {
                        let threshold = (1.0 - 1.0 / (q_req * pj)).max(0.0);
                        if threshold > 0.0 {
                            ((nf * threshold).floor() as u32 + 1).min(n)
                        } else {
                            0
                        }
                    })
                    .collect();
            }
        }
    }

    // Rebalance down if round-ups exceeded the packet budget.
    let budget = (cache_size * nf + 1e-6).floor() as u64;
    let mut total: u64 = m.iter().map(|&mj| mj as u64).sum();
    while total > budget {
        let mut changed = false;
        for j in (0..m.len()).rev() {
            if total <= budget {
                break;
            }
            if m[j] > min_packets[j] {
                m[j] -= 1;
                total -= 1;
                changed = true;
            }
        }
        if !changed {
            return Err(OptimizerError::QuantizeBudget {
                needed: total,
                budget,
            });
        }
    }

    let q: Vec<f64> = m.iter().map(|&mj| mj as f64 / nf).collect();
    let k: Vec<u64> = m.iter().map(|&mj| mj as u64 * n_sbs as u64).collect();
    Ok(Placement {
        q,
        m,
        k,
        n,
        n_sbs,
        quantized: true,
    })
}
