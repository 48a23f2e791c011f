//! SBS grid topology and Monte Carlo estimation of the coverage-count
//! distribution.
//!
//! SBSs sit on a square lattice of pitch `spacing` inside the macro-cell disc
//! of radius `mbs_radius`. The coverage-count distribution `gamma_d` is the
//! probability that a uniformly located covered user lies within range `r` of
//! exactly `d` SBSs. With uniform user density this equals the area fraction
//! of the coverage-`d` region, estimated here by sampling one interior unit
//! cell of the lattice; boundary cells of the disc are second order at the
//! default `mbs_radius / spacing` ratio and are ignored.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::model::{CoverageProfile, ModelError};

/// Minimum sample count accepted by [`estimate_gamma`].
pub const MIN_GAMMA_SAMPLES: u64 = 10_000;

/// Samples per RNG substream. Each chunk draws from its own counter-mode
/// stream keyed by the chunk index, so results do not depend on how chunks
/// are scheduled across workers.
const CHUNK: u64 = 1 << 13;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("topology parameters must be positive: {0}")]
    NonPositiveParameter(&'static str),
    #[error("gamma estimation needs at least {MIN_GAMMA_SAMPLES} samples, got {0}")]
    TooFewSamples(u64),
    #[error("no sampled point was covered by any SBS (r = {r}, spacing = {spacing})")]
    NothingCovered { r: f64, spacing: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Regular SBS grid inside the macro-cell disc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridTopology {
    /// Macro-cell coverage radius `D` in meters.
    pub mbs_radius: f64,
    /// Lattice pitch in meters.
    pub spacing: f64,
    /// SBS coverage radius `r` in meters.
    pub sbs_radius: f64,
    /// User density in users per square meter.
    pub user_density: f64,
    /// Number of lattice points inside the disc.
    pub n_sbs: u32,
    /// Expected user count, `round(density * pi * D^2)`.
    pub expected_users: u64,
    /// True when `spacing / sqrt(2) <= r <= spacing`. Values outside are
    /// accepted; the flag lets callers warn about them.
    pub radius_in_regime: bool,
}

/// Builds the grid topology and derives the SBS count by enumerating lattice
/// points `(i * spacing, j * spacing)` with Euclidean norm at most
/// `mbs_radius`.
pub fn build_grid(
    mbs_radius: f64,
    spacing: f64,
    sbs_radius: f64,
    user_density: f64,
) -> Result<GridTopology, GeometryError> {
    if mbs_radius <= 0.0 || mbs_radius.is_nan() {
        return Err(GeometryError::NonPositiveParameter("mbs_radius"));
    }
    if spacing <= 0.0 || spacing.is_nan() {
        return Err(GeometryError::NonPositiveParameter("spacing"));
    }
    if sbs_radius <= 0.0 || sbs_radius.is_nan() {
        return Err(GeometryError::NonPositiveParameter("sbs_radius"));
    }
    if user_density <= 0.0 || user_density.is_nan() {
        return Err(GeometryError::NonPositiveParameter("user_density"));
    }
    let reach = (mbs_radius / spacing).floor() as i64;
    let limit_sq = mbs_radius * mbs_radius;
    let mut n_sbs = 0u32;
    for i in -reach..=reach {
        for j in -reach..=reach {
            let x = i as f64 * spacing;
            let y = j as f64 * spacing;
            if x * x + y * y <= limit_sq {
                n_sbs += 1;
            }
        }
    }
    let expected_users =
        (user_density * std::f64::consts::PI * mbs_radius * mbs_radius).round() as u64;
    let lo = spacing / std::f64::consts::SQRT_2;
    Ok(GridTopology {
        mbs_radius,
        spacing,
        sbs_radius,
        user_density,
        n_sbs,
        expected_users,
        radius_in_regime: sbs_radius >= lo - 1e-12 && sbs_radius <= spacing + 1e-12,
    })
}

/// Number of grid SBS centers within distance `sbs_radius` of the point.
pub fn coverage_count(x: f64, y: f64, topo: &GridTopology) -> u32 {
    let r = topo.sbs_radius;
    let r_sq = r * r;
    let d_sq = topo.mbs_radius * topo.mbs_radius;
    let i_lo = ((x - r) / topo.spacing).floor() as i64;
    let i_hi = ((x + r) / topo.spacing).ceil() as i64;
    let j_lo = ((y - r) / topo.spacing).floor() as i64;
    let j_hi = ((y + r) / topo.spacing).ceil() as i64;
    let mut count = 0;
    for i in i_lo..=i_hi {
        for j in j_lo..=j_hi {
            let cx = i as f64 * topo.spacing;
            let cy = j as f64 * topo.spacing;
            if cx * cx + cy * cy > d_sq {
                continue; // lattice point outside the macro disc, no SBS there
            }
            let dx = x - cx;
            let dy = y - cy;
            if dx * dx + dy * dy <= r_sq {
                count += 1;
            }
        }
    }
    count
}

/// Result of a coverage-count estimation run.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaEstimate {
    /// Distribution over `d >= 1`, normalized over covered points only.
    pub profile: CoverageProfile,
    /// Fraction of sampled points covered by no SBS. Zero whenever
    /// `sbs_radius >= spacing / sqrt(2)`.
    pub uncovered: f64,
    /// Number of points sampled.
    pub samples: u64,
}

impl GammaEstimate {
    /// CSV rows `d,gamma_d` with header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("d,gamma_d\n");
        for (i, g) in self.profile.gammas().iter().enumerate() {
            out.push_str(&format!("{},{}\n", i + 1, g));
        }
        out
    }
}

/// Estimates `gamma` by uniform sampling over one interior unit cell
/// `[0, spacing]^2`.
///
/// Deterministic for a fixed seed and independent of the number of worker
/// threads: samples are generated in fixed-size chunks, each on its own
/// seeded substream, and chunk histograms are merged by summation.
pub fn estimate_gamma(
    topo: &GridTopology,
    samples: u64,
    seed: u64,
) -> Result<GammaEstimate, GeometryError> {
    if samples < MIN_GAMMA_SAMPLES {
        return Err(GeometryError::TooFewSamples(samples));
    }
    let n_chunks = samples.div_ceil(CHUNK);
    let hist = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let count = CHUNK.min(samples - chunk * CHUNK);
            let mut local = vec![0u64; 8];
            for _ in 0..count {
                let x = rng.random::<f64>() * topo.spacing;
                let y = rng.random::<f64>() * topo.spacing;
                let d = coverage_count(x, y, topo) as usize;
                if d >= local.len() {
                    local.resize(d + 1, 0);
                }
                local[d] += 1;
            }
            local
        })
        .reduce(Vec::new, merge_hist);

    let covered: u64 = hist.iter().skip(1).sum();
    if covered == 0 {
        return Err(GeometryError::NothingCovered {
            r: topo.sbs_radius,
            spacing: topo.spacing,
        });
    }
    let uncovered = hist.first().copied().unwrap_or(0) as f64 / samples as f64;
    let max_d = hist
        .iter()
        .rposition(|&c| c > 0)
        .expect("covered > 0 implies a nonzero bin");
    let gamma: Vec<f64> = (1..=max_d)
        .map(|d| hist[d] as f64 / covered as f64)
        .collect();
    Ok(GammaEstimate {
        profile: CoverageProfile::new(gamma)?,
        uncovered,
        samples,
    })
}

fn merge_hist(mut a: Vec<u64>, b: Vec<u64>) -> Vec<u64> {
    if a.len() < b.len() {
        a.resize(b.len(), 0);
    }
    for (i, v) in b.into_iter().enumerate() {
        a[i] += v;
    }
    a
}
