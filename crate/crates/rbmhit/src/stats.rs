//! Binomial hit-count estimates with Wilson score intervals.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("n_paths must be at least 1")]
    EmptySample,
    #[error("n_hits ({hits}) exceeds n_paths ({paths})")]
    HitsExceedPaths { hits: u64, paths: u64 },
    #[error("confidence must lie in (0, 1), got {0}")]
    BadConfidence(f64),
}

/// A hit-count ratio with confidence interval and seed provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_paths: u64,
    pub n_hits: u64,
    pub master_seed: u64,
}

impl Estimate {
    /// Wilson standard error, `(ci_high - ci_low) / (2 z)` at the interval's
    /// confidence. Used for the "within k sigma" checks against oracles.
    pub fn sigma(&self, confidence: f64) -> f64 {
        let z = normal_quantile(confidence);
        (self.ci_high - self.ci_low) / (2.0 * z)
    }
}

fn normal_quantile(confidence: f64) -> f64 {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    normal.inverse_cdf(0.5 + confidence / 2.0)
}

/// Wilson score interval for `n_hits` successes out of `n_paths` trials.
///
/// Wilson rather than Wald: the interval stays inside `[0, 1]` and keeps
/// sensible coverage for p near 0, which is the small-target regime.
pub fn binomial_estimate(
    n_hits: u64,
    n_paths: u64,
    confidence: f64,
) -> Result<Estimate, StatsError> {
    binomial_estimate_seeded(n_hits, n_paths, confidence, 0)
}

/// [`binomial_estimate`] with seed provenance recorded in the result.
pub fn binomial_estimate_seeded(
    n_hits: u64,
    n_paths: u64,
    confidence: f64,
    master_seed: u64,
) -> Result<Estimate, StatsError> {
    if n_paths == 0 {
        return Err(StatsError::EmptySample);
    }
    if n_hits > n_paths {
        return Err(StatsError::HitsExceedPaths {
            hits: n_hits,
            paths: n_paths,
        });
    }
    if !(0.0..1.0).contains(&confidence) || confidence <= 0.0 {
        return Err(StatsError::BadConfidence(confidence));
    }
    let n = n_paths as f64;
    let p = n_hits as f64 / n;
    let z = normal_quantile(confidence);
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = (z / denom) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    Ok(Estimate {
        p_hat: p,
        ci_low: (center - half).max(0.0),
        ci_high: (center + half).min(1.0),
        n_paths,
        n_hits,
        master_seed,
    })
}
