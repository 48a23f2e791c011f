//! Optimal MDS-coded cache placement for small-cell base stations under
//! eavesdropping constraints.
//!
//! The library models a macro cell whose coverage area contains a regular
//! grid of cache-equipped small-cell base stations (SBS). Files are split
//! into fragments and cached as rateless-coded packets; a user covered by
//! `d` SBSs collects `d * m_j` disjoint packets of file `j` and fetches the
//! rest over the macro backhaul. The crate provides:
//!
//! * [`model`] — library, popularity and coverage distributions, placements;
//! * [`geometry`] — SBS grid construction and Monte Carlo estimation of the
//!   coverage-count distribution `gamma`;
//! * [`optimizer`] — the backhaul-rate objective and an exact greedy solver
//!   for the three placement problems (no secrecy, backhaul eavesdropper,
//!   cache eavesdropper);
//! * [`secrecy`] — secrecy checks and cache-size thresholds;
//! * [`sim`] — Monte Carlo simulation of the delivery phase;
//! * [`experiments`] — config-driven parameter sweeps with CSV output.

pub mod experiments;
pub mod geometry;
pub mod model;
pub mod optimizer;
pub mod secrecy;
pub mod sim;

pub use geometry::{build_grid, estimate_gamma, GammaEstimate, GridTopology};
pub use model::{CoverageProfile, Library, Placement, PopularityProfile, Scenario, ScenarioSpec};
pub use optimizer::{
    backhaul_rate, grid_oracle_solve, quantize, scenario_bounds, solve_placement, Bounds,
    SolveResult,
};
pub use secrecy::{
    check_s1_general, check_s1_worstcase, check_s2, max_cache_size_s2, min_cache_size_s1,
    CacheSizeThreshold, SecrecyReport,
};
pub use sim::{breach_probability_s1, simulate_delivery, RequestMode, SimConfig, SimReport};
