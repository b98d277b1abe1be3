//! Rayon drivers for Monte Carlo studies and the bootstrap.
//!
//! Each replicate draws from its own RNG substream, so results match the
//! sequential drivers in `crisk_core` exactly, whatever the thread count.

use rayon::prelude::*;

use crisk_core::data::Dataset;
use crisk_core::inference::{resample, summarize, BootstrapConfig, BootstrapResult};
use crisk_core::simulate::{run_replicate, summarize_study, DgpSpec, EstimatorSpec, McReport};
use crisk_core::{Error, Result};

/// Runs `f` on a pool capped at `threads` workers (`None` = rayon default).
pub fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> std::result::Result<T, String> {
    match threads {
        None => Ok(f()),
        Some(0) => Err("--threads must be at least 1".into()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| e.to_string())?;
            Ok(pool.install(f))
        }
    }
}

pub fn monte_carlo(
    spec: &DgpSpec,
    estimator: &EstimatorSpec,
    replications: usize,
    seed: u64,
) -> Result<McReport> {
    if replications == 0 {
        return Err(Error::Domain("need at least one replication".into()));
    }
    let outcomes = (0..replications)
        .into_par_iter()
        .map(|r| run_replicate(spec, estimator, seed, r))
        .collect::<Result<Vec<_>>>()?;
    summarize_study(
        &estimator.parameter_names(),
        &estimator.truth(spec),
        &outcomes,
    )
}

/// Nonparametric bootstrap of `estimator` over the rows of `ds`.
pub fn bootstrap<F>(ds: &Dataset, estimator: F, cfg: &BootstrapConfig) -> Result<BootstrapResult>
where
    F: Fn(&Dataset) -> Result<Vec<f64>> + Sync,
{
    cfg.validate()?;
    let point = estimator(ds)?;
    let outcomes = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            Dataset::new(resample(ds.rows(), cfg.seed, r))
                .and_then(|b| estimator(&b))
                .ok()
        })
        .collect();
    summarize(point, outcomes, cfg)
}
