//! Clayton-linked competing-risks data generation and Monte Carlo studies.
//!
//! Latent durations are drawn as `T = S^-1(U | z)`, `C = R^-1(V | z)` with
//! `(U, V)` from the Clayton copula, so that the joint survival of `(T, C)`
//! is `K_theta(S(t|z), R(c|z))`. Observed data are `x = min(T, C)` and
//! `delta = 1{T < C}`; exact ties get `delta = 0`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::rand_core::RngCore;

use crate::copula::{theta_from_tau, Clayton};
use crate::data::{Dataset, Observation};
use crate::estimators::{fit_2se, fit_3se, ModelKind, ThreeStageConfig, TwoStageConfig};
use crate::marginals::{AftModel, Family};
use crate::rng::{open_unit, substream};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DgpSpec {
    pub theta: f64,
    pub model_t: AftModel,
    pub model_c: AftModel,
    /// `Pr(z = 1)` for the single binary covariate.
    pub p_z: f64,
    pub n: usize,
}

impl DgpSpec {
    pub fn new(
        theta: f64,
        model_t: AftModel,
        model_c: AftModel,
        p_z: f64,
        n: usize,
    ) -> Result<Self> {
        Clayton::new(theta)?;
        if !(p_z > 0.0 && p_z < 1.0) {
            return Err(Error::Domain(format!(
                "Pr(z = 1) must lie in (0, 1), got {p_z}"
            )));
        }
        if model_t.beta.len() != 1 || model_c.beta.len() != 1 {
            return Err(Error::Domain(
                "simulated designs use one binary covariate".into(),
            ));
        }
        if n < 2 {
            return Err(Error::Domain(format!(
                "sample size must be at least 2, got {n}"
            )));
        }
        Ok(Self {
            theta,
            model_t,
            model_c,
            p_z,
            n,
        })
    }

    /// Benchmark design: `(alpha, beta, sigma) = (1, 1, 1.5)` for both
    /// latent durations and `Pr(z = 1) = 0.3`.
    pub fn benchmark(family_t: Family, family_c: Family, tau: f64, n: usize) -> Result<Self> {
        let model_t = AftModel::new(family_t, 1.0, vec![1.0], 1.5)?;
        let model_c = AftModel::new(family_c, 1.0, vec![1.0], 1.5)?;
        Self::new(theta_from_tau(tau)?, model_t, model_c, 0.3, n)
    }

    pub fn tau(&self) -> f64 {
        self.theta / (self.theta + 2.0)
    }
}

/// One draw from the Clayton copula by conditional inversion.
pub fn sample_pair<R: RngCore + ?Sized>(copula: &Clayton, rng: &mut R) -> Result<(f64, f64)> {
    let u = open_unit(rng);
    let w = open_unit(rng);
    let v = copula.conditional_v_given_u(u, w)?;
    Ok((u, v.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)))
}

/// Simulated sample plus the number of exact `T == C` collisions.
pub fn generate_with<R: RngCore + ?Sized>(spec: &DgpSpec, rng: &mut R) -> Result<(Dataset, usize)> {
    let copula = Clayton::new(spec.theta)?;
    let mut rows = Vec::with_capacity(spec.n);
    let mut ties = 0;
    for _ in 0..spec.n {
        let z = if open_unit(rng) < spec.p_z { 1.0 } else { 0.0 };
        let (u, v) = sample_pair(&copula, rng)?;
        let t = spec.model_t.inverse_survival(u, &[z])?;
        let c = spec.model_c.inverse_survival(v, &[z])?;
        if t == c {
            ties += 1;
        }
        rows.push(Observation::new(t.min(c), u32::from(t < c), vec![z]));
    }
    Ok((Dataset::new(rows)?, ties))
}

pub fn generate_dataset(spec: &DgpSpec, seed: u64) -> Result<Dataset> {
    generate_with(spec, &mut substream(seed, 0)).map(|(ds, _)| ds)
}

/// Estimator run on each simulated sample.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "method", rename_all = "snake_case"))]
pub enum EstimatorSpec {
    ThreeStage(ThreeStageConfig),
    TwoStage(TwoStageConfig),
}

impl EstimatorSpec {
    pub fn parameter_names(&self) -> Vec<String> {
        match self {
            EstimatorSpec::ThreeStage(_) => {
                ["tau", "beta", "alpha", "sigma"].map(String::from).to_vec()
            }
            EstimatorSpec::TwoStage(_) => ["tau", "beta"].map(String::from).to_vec(),
        }
    }

    /// Estimates in the order of [`parameter_names`](Self::parameter_names).
    pub fn estimate(&self, ds: &Dataset) -> Result<Vec<f64>> {
        match self {
            EstimatorSpec::ThreeStage(cfg) => {
                let fit = fit_3se(ds, cfg)?;
                Ok(vec![
                    fit.tau_hat,
                    fit.model.beta()[0],
                    fit.model.alpha(),
                    fit.model.sigma(),
                ])
            }
            EstimatorSpec::TwoStage(cfg) => {
                let fit = fit_2se(ds, cfg)?;
                Ok(vec![fit.tau_hat, fit.beta_hat[0]])
            }
        }
    }

    /// Population values the estimates target under `spec`.
    ///
    /// Proportional-hazards coefficients are `sigma * beta` of the AFT
    /// generating model, which is PH only for Weibull and exponential
    /// latent durations; other families get NaN.
    pub fn truth(&self, spec: &DgpSpec) -> Vec<f64> {
        let m = &spec.model_t;
        let ph_beta = if matches!(m.family, Family::Weibull | Family::Exponential) {
            m.sigma * m.beta[0]
        } else {
            f64::NAN
        };
        match self {
            EstimatorSpec::ThreeStage(cfg) => match cfg.kind {
                ModelKind::Aft => vec![spec.tau(), m.beta[0], m.alpha, m.sigma],
                ModelKind::Ph => vec![spec.tau(), ph_beta, m.alpha, m.sigma],
            },
            EstimatorSpec::TwoStage(_) => vec![spec.tau(), ph_beta],
        }
    }
}

/// Outcome of one replication: estimates (or `None` on failure) and the
/// number of latent-time collisions in its sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateOutcome {
    pub estimates: Option<Vec<f64>>,
    pub ties: usize,
}

/// Replication `r` of a study; depends only on `(spec, estimator, seed, r)`.
pub fn run_replicate(
    spec: &DgpSpec,
    estimator: &EstimatorSpec,
    seed: u64,
    r: usize,
) -> Result<ReplicateOutcome> {
    let (ds, ties) = generate_with(spec, &mut substream(seed, r as u64))?;
    Ok(ReplicateOutcome {
        estimates: estimator.estimate(&ds).ok(),
        ties,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParameterSummary {
    pub name: String,
    pub truth: f64,
    pub mean: f64,
    pub bias2: f64,
    pub mse: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct McReport {
    pub parameters: Vec<ParameterSummary>,
    pub replications: usize,
    pub failures: usize,
    pub ties: usize,
}

impl McReport {
    pub fn parameter(&self, name: &str) -> Option<&ParameterSummary> {
        self.parameters.iter().find(|p| p.name == name)
    }
}

/// Bias squared and MSE per parameter over the successful replications.
pub fn summarize_study(
    names: &[String],
    truth: &[f64],
    outcomes: &[ReplicateOutcome],
) -> Result<McReport> {
    let replications = outcomes.len();
    let ok: Vec<&Vec<f64>> = outcomes
        .iter()
        .filter_map(|o| o.estimates.as_ref())
        .collect();
    let failures = replications - ok.len();
    if 2 * failures > replications || ok.is_empty() {
        return Err(Error::TooManyFailures {
            failures,
            total: replications,
        });
    }
    let m = ok.len() as f64;
    let parameters = names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let mean = ok.iter().map(|e| e[j]).sum::<f64>() / m;
            let mse = ok
                .iter()
                .map(|e| (e[j] - truth[j]) * (e[j] - truth[j]))
                .sum::<f64>()
                / m;
            let bias = mean - truth[j];
            ParameterSummary {
                name: name.clone(),
                truth: truth[j],
                mean,
                bias2: bias * bias,
                mse,
            }
        })
        .collect();
    Ok(McReport {
        parameters,
        replications,
        failures,
        ties: outcomes.iter().map(|o| o.ties).sum(),
    })
}

/// Sequential Monte Carlo study; the `crisk` crate has a parallel driver
/// producing the same report.
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
        .map(|r| run_replicate(spec, estimator, seed, r))
        .collect::<Result<Vec<_>>>()?;
    summarize_study(
        &estimator.parameter_names(),
        &estimator.truth(spec),
        &outcomes,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_under_seed() {
        let spec = DgpSpec::benchmark(Family::Weibull, Family::Weibull, 0.5, 50).unwrap();
        assert_eq!(
            generate_dataset(&spec, 9).unwrap(),
            generate_dataset(&spec, 9).unwrap()
        );
        assert_ne!(
            generate_dataset(&spec, 9).unwrap(),
            generate_dataset(&spec, 10).unwrap()
        );
    }

    #[test]
    fn comonotone_limit() {
        let spec = DgpSpec::benchmark(Family::Weibull, Family::Weibull, 0.9999, 500).unwrap();
        let mut rng = substream(4, 0);
        let copula = Clayton::new(spec.theta).unwrap();
        for _ in 0..200 {
            let (u, v) = sample_pair(&copula, &mut rng).unwrap();
            let t = spec.model_t.inverse_survival(u, &[0.0]).unwrap();
            let c = spec.model_c.inverse_survival(v, &[0.0]).unwrap();
            assert!((t.min(c) - t).abs() <= 0.05 * t.max(1e-3));
        }
    }

    #[test]
    fn constant_estimates_have_zero_error() {
        let names = vec![String::from("tau")];
        let outcomes: Vec<ReplicateOutcome> = (0..5)
            .map(|_| ReplicateOutcome {
                estimates: Some(vec![0.3]),
                ties: 0,
            })
            .collect();
        let rep = summarize_study(&names, &[0.3], &outcomes).unwrap();
        assert_eq!(rep.parameters[0].bias2, 0.0);
        assert_eq!(rep.parameters[0].mse, 0.0);
    }

    #[test]
    fn too_many_failures() {
        let names = vec![String::from("tau")];
        let mut outcomes = vec![
            ReplicateOutcome {
                estimates: None,
                ties: 0
            };
            3
        ];
        outcomes.push(ReplicateOutcome {
            estimates: Some(vec![0.0]),
            ties: 0,
        });
        assert!(matches!(
            summarize_study(&names, &[0.0], &outcomes),
            Err(Error::TooManyFailures {
                failures: 3,
                total: 4
            })
        ));
    }

    #[test]
    fn spec_validation() {
        let m = AftModel::new(Family::Weibull, 1.0, vec![1.0], 1.5).unwrap();
        assert!(DgpSpec::new(1.0, m.clone(), m.clone(), 1.0, 10).is_err());
        assert!(DgpSpec::new(-2.0, m.clone(), m.clone(), 0.3, 10).is_err());
        assert!(DgpSpec::new(1.0, m.clone(), m, 0.3, 1).is_err());
    }
}
