//! Linear-plus-residual cost model of the regime shift.
//!
//! Execution time is modelled as `a * n + c` fitted on the measurements that
//! did not spill, plus a non-parametric residual curve `alpha(n)` over the
//! ones that did. The tensor path never spills, so its fit is purely linear.

use crate::error::{Error, Result};
use crate::selector::Path;
use crate::stats::percentile;

/// One `(n, budget, path)` cell with its repetition samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub n: u64,
    pub m: u64,
    pub path: Path,
    /// Seconds, non-empty, all positive.
    pub wall_times: Vec<f64>,
    pub temp_blocks: u64,
}

impl Measurement {
    pub fn new(n: u64, m: u64, path: Path, wall_times: Vec<f64>, temp_blocks: u64) -> Result<Self> {
        if wall_times.is_empty() {
            return Err(Error::EmptySamples);
        }
        if let Some(t) = wall_times.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(Error::Format(format!("wall time {t} is not positive")));
        }
        Ok(Self { n, m, path, wall_times, temp_blocks })
    }

    /// Nearest-rank median of the samples.
    pub fn median(&self) -> f64 {
        percentile(&self.wall_times, 50.0).expect("non-empty samples")
    }

    pub fn spilled(&self) -> bool {
        self.temp_blocks > 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeFit {
    pub path: Path,
    pub m: u64,
    /// Seconds per row.
    pub linear_coeff: f64,
    /// Seconds.
    pub intercept: f64,
    /// Smallest measured `n` that spilled.
    pub spill_threshold_rows: Option<u64>,
    /// `(n, alpha seconds)` for the spilling points, ascending in `n`.
    pub alpha_curve: Vec<(u64, f64)>,
    /// Standard deviation of the linear fit's residuals on the zero-spill
    /// points.
    pub residual_std: f64,
}

/// Fits one `(path, budget)` series. Needs at least three zero-spill points
/// at two or more distinct sizes and, when anything spilled, at least two
/// spilling points.
pub fn fit_regime(measurements: &[Measurement]) -> Result<RegimeFit> {
    let first = measurements
        .first()
        .ok_or_else(|| Error::InsufficientData("no measurements".into()))?;
    if measurements.iter().any(|m| m.path != first.path || m.m != first.m) {
        return Err(Error::InsufficientData(
            "measurements mix paths or budgets".into(),
        ));
    }
    let (spilling, flat): (Vec<&Measurement>, Vec<&Measurement>) =
        measurements.iter().partition(|m| m.spilled());
    if flat.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} zero-spill points, need 3",
            flat.len()
        )));
    }
    if spilling.len() == 1 {
        return Err(Error::InsufficientData("1 spilling point, need 2".into()));
    }

    let xs: Vec<f64> = flat.iter().map(|m| m.n as f64).collect();
    let ys: Vec<f64> = flat.iter().map(|m| m.median()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData(
            "zero-spill points share one input size".into(),
        ));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let linear_coeff = sxy / sxx;
    let intercept = my - linear_coeff * mx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - linear_coeff * x - intercept).powi(2))
        .sum();
    let dof = (xs.len() as f64 - 2.0).max(1.0);
    let residual_std = (sse / dof).sqrt();

    let mut alpha_curve: Vec<(u64, f64)> = spilling
        .iter()
        .map(|m| (m.n, m.median() - (linear_coeff * m.n as f64 + intercept)))
        .collect();
    alpha_curve.sort_by_key(|p| p.0);
    Ok(RegimeFit {
        path: first.path,
        m: first.m,
        linear_coeff,
        intercept,
        spill_threshold_rows: alpha_curve.first().map(|p| p.0),
        alpha_curve,
        residual_std,
    })
}

impl RegimeFit {
    pub fn linear(&self, n: u64) -> f64 {
        self.linear_coeff * n as f64 + self.intercept
    }

    /// Residual at `n`: zero below the spill threshold, linearly
    /// interpolated between curve points, extended with the last segment's
    /// slope beyond them.
    pub fn alpha(&self, n: u64) -> f64 {
        let c = &self.alpha_curve;
        match c.len() {
            0 => 0.0,
            _ if n < c[0].0 => 0.0,
            1 => c[0].1,
            len => {
                let i = c.partition_point(|p| p.0 <= n).clamp(1, len - 1);
                let ((n0, a0), (n1, a1)) = (c[i - 1], c[i]);
                let slope = (a1 - a0) / (n1 - n0) as f64;
                a0 + slope * (n as f64 - n0 as f64)
            }
        }
    }

    /// Whether every residual clears `-2 * residual_std`.
    pub fn alpha_within_noise(&self) -> bool {
        let eps = 2.0 * self.residual_std;
        self.alpha_curve.iter().all(|&(_, a)| a >= -eps)
    }
}

/// Predicted seconds at `n`.
pub fn predict(fit: &RegimeFit, n: u64) -> f64 {
    fit.linear(n) + fit.alpha(n)
}

/// P99 over P50 of the repetition samples; needs at least 20.
pub fn dispersion(m: &Measurement) -> Result<f64> {
    if m.wall_times.len() < 20 {
        return Err(Error::InsufficientData(format!(
            "{} samples, need 20",
            m.wall_times.len()
        )));
    }
    Ok(percentile(&m.wall_times, 99.0)? / percentile(&m.wall_times, 50.0)?)
}
