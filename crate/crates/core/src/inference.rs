//! Nonparametric bootstrap with percentile intervals.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;
use core::fmt::Display;

use crate::rng::{index, substream};
use crate::{Error, Result};
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BootstrapConfig {
    pub replicates: usize,
    /// Two-sided coverage of the percentile interval, e.g. 0.95.
    pub level: f64,
    pub seed: u64,
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates < 2 {
            return Err(Error::Domain(format!(
                "need at least 2 replicates, got {}",
                self.replicates
            )));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Domain(format!(
                "confidence level must lie in (0, 1), got {}",
                self.level
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BootstrapResult {
    pub point: Vec<f64>,
    /// Successful replicate estimates, in replicate order.
    pub replicates: Vec<Vec<f64>>,
    pub se: Vec<f64>,
    pub ci_lower: Vec<f64>,
    pub ci_upper: Vec<f64>,
    pub level: f64,
    pub requested: usize,
    pub failures: usize,
}

/// Row indices of bootstrap replicate `replicate`; a function of
/// `(n, seed, replicate)` only.
pub fn resample_indices(n: usize, seed: u64, replicate: usize) -> Vec<usize> {
    let mut rng = substream(seed, replicate as u64);
    (0..n).map(|_| index(&mut rng, n)).collect()
}

pub fn resample<T: Clone>(rows: &[T], seed: u64, replicate: usize) -> Vec<T> {
    resample_indices(rows.len(), seed, replicate)
        .into_iter()
        .map(|i| rows[i].clone())
        .collect()
}

/// Runs `estimator` on the full sample and on `cfg.replicates` resamples.
/// Replicates on which the estimator fails are skipped and counted.
pub fn bootstrap<T, E, F>(
    rows: &[T],
    estimator: F,
    cfg: &BootstrapConfig,
) -> Result<BootstrapResult>
where
    T: Clone,
    E: Display,
    F: Fn(&[T]) -> core::result::Result<Vec<f64>, E>,
{
    cfg.validate()?;
    let point = estimator(rows).map_err(|e| Error::Estimation(e.to_string()))?;
    let outcomes = (0..cfg.replicates)
        .map(|r| estimator(&resample(rows, cfg.seed, r)).ok())
        .collect();
    summarize(point, outcomes, cfg)
}

/// Builds the result from per-replicate outcomes (`None` = failed).
pub fn summarize(
    point: Vec<f64>,
    outcomes: Vec<Option<Vec<f64>>>,
    cfg: &BootstrapConfig,
) -> Result<BootstrapResult> {
    cfg.validate()?;
    let requested = outcomes.len();
    let replicates: Vec<Vec<f64>> = outcomes.into_iter().flatten().collect();
    let failures = requested - replicates.len();
    if 2 * failures > requested || replicates.len() < 2 {
        return Err(Error::TooManyFailures {
            failures,
            total: requested,
        });
    }
    let p = point.len();
    if replicates.iter().any(|r| r.len() != p) {
        return Err(Error::Estimation(
            "replicate estimates differ in length".into(),
        ));
    }
    let b = replicates.len() as f64;
    let alpha = 1.0 - cfg.level;
    let mut se = Vec::with_capacity(p);
    let mut lo = Vec::with_capacity(p);
    let mut hi = Vec::with_capacity(p);
    for j in 0..p {
        let mut col: Vec<f64> = replicates.iter().map(|r| r[j]).collect();
        let mean = col.iter().sum::<f64>() / b;
        se.push((col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (b - 1.0)).sqrt());
        col.sort_by(f64::total_cmp);
        lo.push(quantile_sorted(&col, alpha / 2.0));
        hi.push(quantile_sorted(&col, 1.0 - alpha / 2.0));
    }
    Ok(BootstrapResult {
        point,
        replicates,
        se,
        ci_lower: lo,
        ci_upper: hi,
        level: cfg.level,
        requested,
        failures,
    })
}

/// Linear-interpolation quantile of sorted data (Hyndman-Fan type 7).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}
