//! Nearest-rank percentiles over latency samples.

use crate::error::{Error, Result};

/// Slack absorbing float error in `q / 100 * n` before the ceiling, so that
/// `q = 99, n = 100` lands on rank 99 rather than 100.
const RANK_EPSILON: f64 = 1e-9;

/// Nearest-rank percentile: the value at index `ceil(q/100 * n) - 1` of the
/// ascending sort. `q = 100` is the maximum.
pub fn percentile(samples: &[f64], q: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    percentile_sorted(&sorted, q)
}

/// [`percentile`] over samples already sorted ascending.
pub fn percentile_sorted(sorted: &[f64], q: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::EmptySamples);
    }
    Ok(sorted[rank_index(sorted.len(), q)?])
}

fn rank_index(n: usize, q: f64) -> Result<usize> {
    if !(q > 0.0 && q <= 100.0) {
        return Err(Error::InvalidPercentile(q));
    }
    let rank = (q / 100.0 * n as f64 - RANK_EPSILON).ceil().max(1.0) as usize;
    Ok(rank.min(n) - 1)
}

/// Sorted durations in seconds with their headline percentiles.
#[derive(Debug, Clone, PartialEq)]
pub struct LatencyDistribution {
    samples: Vec<f64>,
    pub p50: f64,
    pub p95: f64,
    pub p99: f64,
    pub max: f64,
}

impl LatencyDistribution {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySamples);
        }
        if let Some(bad) = samples.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
            return Err(Error::Format(format!("invalid duration sample {bad}")));
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self {
            p50: percentile_sorted(&samples, 50.0)?,
            p95: percentile_sorted(&samples, 95.0)?,
            p99: percentile_sorted(&samples, 99.0)?,
            max: *samples.last().unwrap(),
            samples,
        })
    }

    /// Ascending samples.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn percentile(&self, q: f64) -> Result<f64> {
        percentile_sorted(&self.samples, q)
    }
}
