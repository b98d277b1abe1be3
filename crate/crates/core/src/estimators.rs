//! Estimation of the copula parameter together with the marginal model.
//!
//! * Three-stage estimator (3SE): for each candidate `theta` compute the
//!   copula-graphic curves, regress `log x` on the linearized model to get
//!   `chi(theta)`, and score the distance between the fitted parametric
//!   survival and the copula-graphic values. `theta` minimizes the score.
//! * Two-stage estimator (2SE): under proportional hazards the log-log
//!   ratio of two strata's survival curves is constant in `x`, so `theta`
//!   minimizes the sample variance of that ratio across observations.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::cge::{copula_graphic, trim_support, CgeCurve, Trim};
use crate::copula::{theta_from_tau, Clayton};
use crate::data::{stratify, Dataset, StrataIndex};
use crate::first_stage::{overall_survival, sub_distribution, StepFunction};
use crate::linalg::weighted_least_squares;
use crate::marginals::{AftModel, Family, PhModel};
use crate::optim::{grid_then_golden, TauGrid, TracePoint};
use crate::{Error, Result};
#[allow(unused_imports)]
use num_traits::Float;

/// Copula-graphic values are clamped into `[S_CLAMP, 1 - S_CLAMP]` before
/// they enter `S_W^-1`.
pub const S_CLAMP: f64 = 1e-6;

/// Default golden-section tolerance in tau.
pub const TAU_TOL: f64 = 1e-4;

/// First-stage estimates per stratum, shared by every `theta` evaluation.
#[derive(Debug, Clone)]
pub struct Prepared<'a> {
    ds: &'a Dataset,
    strata: StrataIndex,
    pi: Vec<StepFunction>,
    sub: Vec<StepFunction>,
}

impl<'a> Prepared<'a> {
    pub fn new(ds: &'a Dataset) -> Result<Self> {
        let strata = stratify(ds)?;
        let mut pi = Vec::with_capacity(strata.len());
        let mut sub = Vec::with_capacity(strata.len());
        for st in strata.strata() {
            let rows: Vec<(f64, bool)> = st
                .rows
                .iter()
                .map(|&i| (ds.rows()[i].x, ds.rows()[i].is_event()))
                .collect();
            pi.push(overall_survival(&rows)?);
            sub.push(sub_distribution(&rows)?);
        }
        Ok(Self {
            ds,
            strata,
            pi,
            sub,
        })
    }

    pub fn dataset(&self) -> &Dataset {
        self.ds
    }

    pub fn strata(&self) -> &StrataIndex {
        &self.strata
    }

    pub fn overall_survival(&self, stratum: usize) -> &StepFunction {
        &self.pi[stratum]
    }

    pub fn sub_distribution(&self, stratum: usize) -> &StepFunction {
        &self.sub[stratum]
    }

    /// One copula-graphic curve per stratum.
    pub fn curves(&self, theta: f64) -> Result<Vec<CgeCurve>> {
        let copula = Clayton::new(theta)?;
        self.pi
            .iter()
            .zip(&self.sub)
            .map(|(p, f)| copula_graphic(p, f, &copula))
            .collect()
    }

    /// `S_CGE(x_i | z_i)` for every row.
    pub fn row_values(&self, curves: &[CgeCurve]) -> Vec<f64> {
        self.ds
            .rows()
            .iter()
            .enumerate()
            .map(|(i, r)| curves[self.strata.stratum_of(i)].evaluate(r.x))
            .collect()
    }
}

fn clamp_survival(s: &[f64]) -> (Vec<f64>, usize) {
    let mut clamped = 0;
    let out = s
        .iter()
        .map(|&v| {
            let c = v.clamp(S_CLAMP, 1.0 - S_CLAMP);
            if c != v {
                clamped += 1;
            }
            c
        })
        .collect();
    (out, clamped)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ModelKind {
    Aft,
    Ph,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum FittedModel {
    Aft(AftModel),
    Ph(PhModel),
}

impl FittedModel {
    pub fn survival(&self, t: f64, z: &[f64]) -> f64 {
        match self {
            FittedModel::Aft(m) => m.survival(t, z),
            FittedModel::Ph(m) => m.survival(t, z),
        }
    }

    pub fn alpha(&self) -> f64 {
        match self {
            FittedModel::Aft(m) => m.alpha,
            FittedModel::Ph(m) => m.alpha,
        }
    }

    pub fn beta(&self) -> &[f64] {
        match self {
            FittedModel::Aft(m) => &m.beta,
            FittedModel::Ph(m) => &m.beta,
        }
    }

    pub fn sigma(&self) -> f64 {
        match self {
            FittedModel::Aft(m) => m.sigma,
            FittedModel::Ph(m) => m.sigma,
        }
    }
}

/// Result of the linear regression step.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub model: FittedModel,
    /// Raw regression coefficients; `(log alpha, beta', 1/sigma)` for AFT.
    pub coefficients: Vec<f64>,
    /// Rows whose survival value had to be clamped.
    pub clamped: usize,
}

/// Linearized AFT regression `log x_i = -log alpha - z_i'beta + S_W^-1(s_i)/sigma`.
///
/// `weights` is the diagonal of the inverse error covariance; `None` is OLS.
/// For the exponential family the slope on `S_W^-1` is fixed at one.
pub fn fgls_fit(
    ds: &Dataset,
    s_hat: &[f64],
    family: Family,
    weights: Option<&[f64]>,
) -> Result<LinearFit> {
    let n = ds.len();
    let k = ds.k();
    check_lengths(n, s_hat, weights)?;
    let (s, clamped) = clamp_survival(s_hat);
    let p = if family.has_shape() { k + 2 } else { k + 1 };
    if n <= p {
        return Err(Error::RankDeficient(format!(
            "{n} rows for {p} coefficients"
        )));
    }
    let mut design = Vec::with_capacity(n * p);
    let mut y = Vec::with_capacity(n);
    for (row, &si) in ds.rows().iter().zip(&s) {
        let w = family.sw_inverse(si)?;
        design.push(-1.0);
        design.extend(row.z.iter().map(|v| -v));
        if family.has_shape() {
            design.push(w);
            y.push(row.x.ln());
        } else {
            y.push(row.x.ln() - w);
        }
    }
    let chi = weighted_least_squares(&design, &y, weights, p)?;
    let sigma = if family.has_shape() {
        let inv = chi[k + 1];
        if !(inv > 0.0) {
            return Err(Error::Estimation(format!(
                "fitted 1/sigma = {inv} is not positive"
            )));
        }
        1.0 / inv
    } else {
        1.0
    };
    let model = AftModel::new(family, chi[0].exp(), chi[1..=k].to_vec(), sigma)?;
    Ok(LinearFit {
        model: FittedModel::Aft(model),
        coefficients: chi,
        clamped,
    })
}

/// Linearized PH regression `log(-log s_i) = sigma log alpha + sigma log x_i + z_i'beta`.
///
/// Only baselines that are linear in `log x` after the transform are
/// supported: Weibull and exponential.
pub fn ph_fit(
    ds: &Dataset,
    s_hat: &[f64],
    family: Family,
    weights: Option<&[f64]>,
) -> Result<LinearFit> {
    let n = ds.len();
    let k = ds.k();
    check_lengths(n, s_hat, weights)?;
    if !matches!(family, Family::Weibull | Family::Exponential) {
        return Err(Error::Unsupported(format!(
            "PH regression with a {family} baseline"
        )));
    }
    let (s, clamped) = clamp_survival(s_hat);
    let shape = family.has_shape();
    let p = if shape { k + 2 } else { k + 1 };
    if n <= p {
        return Err(Error::RankDeficient(format!(
            "{n} rows for {p} coefficients"
        )));
    }
    let mut design = Vec::with_capacity(n * p);
    let mut y = Vec::with_capacity(n);
    for (row, &si) in ds.rows().iter().zip(&s) {
        let lhs = (-si.ln()).ln();
        design.push(1.0);
        if shape {
            design.push(row.x.ln());
            y.push(lhs);
        } else {
            y.push(lhs - row.x.ln());
        }
        design.extend(row.z.iter().copied());
    }
    let c = weighted_least_squares(&design, &y, weights, p)?;
    let (sigma, alpha, beta) = if shape {
        let sigma = c[1];
        if !(sigma > 0.0) {
            return Err(Error::Estimation(format!(
                "fitted sigma = {sigma} is not positive"
            )));
        }
        (sigma, (c[0] / sigma).exp(), c[2..].to_vec())
    } else {
        (1.0, c[0].exp(), c[1..].to_vec())
    };
    let model = PhModel::new(family, alpha, beta, sigma)?;
    Ok(LinearFit {
        model: FittedModel::Ph(model),
        coefficients: c,
        clamped,
    })
}

fn check_lengths(n: usize, s_hat: &[f64], weights: Option<&[f64]>) -> Result<()> {
    if s_hat.len() != n {
        return Err(Error::Data(format!(
            "{} survival values for {n} rows",
            s_hat.len()
        )));
    }
    if let Some(w) = weights {
        if w.len() != n {
            return Err(Error::Data(format!("{} weights for {n} rows", w.len())));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ThreeStageConfig {
    pub family: Family,
    pub kind: ModelKind,
    pub grid: TauGrid,
    pub tol: f64,
    /// Score only `delta = 1` rows.
    pub events_only: bool,
    /// Diagonal regression weights; `None` is OLS.
    pub weights: Option<Vec<f64>>,
}

impl ThreeStageConfig {
    pub fn new(family: Family, kind: ModelKind) -> Self {
        Self {
            family,
            kind,
            grid: TauGrid::default(),
            tol: TAU_TOL,
            events_only: false,
            weights: None,
        }
    }
}

/// Criterion value at one `theta` along with the regression behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct CvmEvaluation {
    pub value: f64,
    pub fit: LinearFit,
    /// Mean of `S_model(x_i) - S_CGE(x_i)` over scored rows.
    pub mean_difference: f64,
    pub scored: usize,
}

/// Cramer-von Mises distance between the fitted parametric survival and
/// the copula-graphic values at `theta`.
pub fn cvm_objective(
    prep: &Prepared<'_>,
    theta: f64,
    cfg: &ThreeStageConfig,
) -> Result<CvmEvaluation> {
    let curves = prep.curves(theta)?;
    let s = prep.row_values(&curves);
    let ds = prep.dataset();
    let fit = match cfg.kind {
        ModelKind::Aft => fgls_fit(ds, &s, cfg.family, cfg.weights.as_deref())?,
        ModelKind::Ph => ph_fit(ds, &s, cfg.family, cfg.weights.as_deref())?,
    };
    let (value, mean_difference, scored) = score(ds, &s, &fit.model, cfg.events_only);
    if scored == 0 {
        return Err(Error::Estimation("no rows to score".into()));
    }
    Ok(CvmEvaluation {
        value,
        fit,
        mean_difference,
        scored,
    })
}

/// AFT variant of [`cvm_objective`].
pub fn cvm_objective_aft(prep: &Prepared<'_>, theta: f64, family: Family) -> Result<f64> {
    cvm_objective(prep, theta, &ThreeStageConfig::new(family, ModelKind::Aft)).map(|e| e.value)
}

/// `(mean squared difference, mean difference, rows scored)`.
pub fn score(
    ds: &Dataset,
    s_cge: &[f64],
    model: &FittedModel,
    events_only: bool,
) -> (f64, f64, usize) {
    let mut sq = 0.0;
    let mut diff = 0.0;
    let mut m = 0usize;
    for (row, &s) in ds.rows().iter().zip(s_cge) {
        if events_only && !row.is_event() {
            continue;
        }
        let d = model.survival(row.x, &row.z) - s;
        sq += d * d;
        diff += d;
        m += 1;
    }
    let m_f = m.max(1) as f64;
    (sq / m_f, diff / m_f, m)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitResult3SE {
    pub tau_hat: f64,
    pub theta_hat: f64,
    pub model: FittedModel,
    pub objective_value: f64,
    pub objective_trace: Vec<TracePoint>,
    /// Rows scored by the criterion.
    pub kept_n: usize,
    /// Rows whose copula-graphic value was clamped at the optimum.
    pub clamped: usize,
    /// Mean of `S_model - S_CGE` at the optimum.
    pub mean_difference: f64,
    pub evaluations: usize,
}

pub fn fit_3se(ds: &Dataset, cfg: &ThreeStageConfig) -> Result<FitResult3SE> {
    let prep = Prepared::new(ds)?;
    let search = grid_then_golden(&cfg.grid, cfg.tol, |tau| {
        cvm_objective(&prep, theta_from_tau(tau)?, cfg).map(|e| e.value)
    })?;
    let theta_hat = theta_from_tau(search.tau)?;
    let at_optimum = cvm_objective(&prep, theta_hat, cfg)?;
    Ok(FitResult3SE {
        tau_hat: search.tau,
        theta_hat,
        model: at_optimum.fit.model,
        objective_value: at_optimum.value,
        objective_trace: search.trace,
        kept_n: at_optimum.scored,
        clamped: at_optimum.fit.clamped,
        mean_difference: at_optimum.mean_difference,
        evaluations: search.evaluations + 1,
    })
}

/// `log[log S_other(x) / log S_ref(x)] / (z_other - z_ref)` for a scalar covariate.
pub fn semiparam_b(
    x: f64,
    reference: &CgeCurve,
    other: &CgeCurve,
    z_ref: f64,
    z_other: f64,
) -> Result<f64> {
    if z_ref == z_other {
        return Err(Error::Domain("the two covariate values must differ".into()));
    }
    let d = log_log_ratio(x, reference, other)?;
    Ok(d / (z_other - z_ref))
}

fn log_log_ratio(x: f64, reference: &CgeCurve, other: &CgeCurve) -> Result<f64> {
    let s_ref = reference.evaluate(x);
    let s_other = other.evaluate(x);
    for s in [s_ref, s_other] {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::UndefinedB(format!("survival value {s} at x = {x}")));
        }
    }
    let d = (s_other.ln() / s_ref.ln()).ln();
    if !d.is_finite() {
        return Err(Error::UndefinedB(format!(
            "non-finite log ratio at x = {x}"
        )));
    }
    Ok(d)
}

/// Maps per-stratum log-log ratios against the reference stratum to a
/// coefficient vector by least squares on the covariate differences.
#[derive(Debug, Clone)]
struct PairingMap {
    reference: usize,
    others: Vec<usize>,
    /// `k x others.len()` pseudo-inverse, row-major.
    pinv: Vec<f64>,
    k: usize,
}

impl PairingMap {
    fn new(strata: &StrataIndex, k: usize) -> Result<Self> {
        if strata.len() < 2 || k == 0 {
            return Err(Error::SingleStratum);
        }
        let reference = strata.largest();
        let others: Vec<usize> = (0..strata.len()).filter(|&s| s != reference).collect();
        let z_ref = &strata.strata()[reference].z;
        let m = others.len();
        let mut design = Vec::with_capacity(m * k);
        for &s in &others {
            let z = &strata.strata()[s].z;
            design.extend(z.iter().zip(z_ref).map(|(a, b)| a - b));
        }
        let mut pinv = vec![0.0; k * m];
        for col in 0..m {
            let mut e = vec![0.0; m];
            e[col] = 1.0;
            let sol = weighted_least_squares(&design, &e, None, k).map_err(|_| {
                Error::RankDeficient(
                    "covariate strata do not span every covariate direction".into(),
                )
            })?;
            for (j, v) in sol.into_iter().enumerate() {
                pinv[j * m + col] = v;
            }
        }
        Ok(Self {
            reference,
            others,
            pinv,
            k,
        })
    }

    fn coefficients(&self, x: f64, curves: &[CgeCurve]) -> Result<Vec<f64>> {
        let m = self.others.len();
        let mut d = Vec::with_capacity(m);
        for &s in &self.others {
            d.push(log_log_ratio(x, &curves[self.reference], &curves[s])?);
        }
        Ok((0..self.k)
            .map(|j| {
                self.pinv[j * m..(j + 1) * m]
                    .iter()
                    .zip(&d)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect())
    }
}

/// Unbiased sample variance.
pub fn sample_variance(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::Estimation(format!(
            "variance needs at least 2 values, got {}",
            values.len()
        )));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    Ok(values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceEvaluation {
    pub value: f64,
    /// Componentwise mean of the per-row coefficients.
    pub beta_mean: Vec<f64>,
    pub trim: Trim,
    /// Trimmed-in rows whose coefficient was undefined and were dropped.
    pub dropped: usize,
}

/// Sample variance of `1'b_i(theta)` over rows kept by support trimming.
pub fn variance_objective(prep: &Prepared<'_>, theta: f64) -> Result<VarianceEvaluation> {
    let ds = prep.dataset();
    let pairing = PairingMap::new(prep.strata(), ds.k())?;
    variance_with(prep, &pairing, theta)
}

fn variance_with(
    prep: &Prepared<'_>,
    pairing: &PairingMap,
    theta: f64,
) -> Result<VarianceEvaluation> {
    let ds = prep.dataset();
    let curves = prep.curves(theta)?;
    let xs: Vec<f64> = ds.rows().iter().map(|r| r.x).collect();
    let trim = trim_support(&curves, &xs)?;
    let k = ds.k();
    let mut sums = Vec::with_capacity(trim.kept.len());
    let mut beta_sum = vec![0.0; k];
    let mut dropped = 0;
    for &i in &trim.kept {
        match pairing.coefficients(xs[i], &curves) {
            Ok(b) => {
                sums.push(b.iter().sum::<f64>());
                for (acc, v) in beta_sum.iter_mut().zip(&b) {
                    *acc += v;
                }
            }
            Err(Error::UndefinedB(_)) => dropped += 1,
            Err(e) => return Err(e),
        }
    }
    let value = sample_variance(&sums)?;
    let m = sums.len() as f64;
    let beta_mean = beta_sum.into_iter().map(|b| b / m).collect();
    Ok(VarianceEvaluation {
        value,
        beta_mean,
        trim,
        dropped,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TwoStageConfig {
    pub grid: TauGrid,
    pub tol: f64,
}

impl Default for TwoStageConfig {
    fn default() -> Self {
        Self {
            grid: TauGrid::default(),
            tol: TAU_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitResult2SE {
    pub tau_hat: f64,
    pub theta_hat: f64,
    pub beta_hat: Vec<f64>,
    pub objective_value: f64,
    pub objective_trace: Vec<TracePoint>,
    pub x_star: f64,
    pub x_double_star: f64,
    pub kept_n: usize,
    pub dropped: usize,
    pub evaluations: usize,
}

pub fn fit_2se(ds: &Dataset, cfg: &TwoStageConfig) -> Result<FitResult2SE> {
    let prep = Prepared::new(ds)?;
    let pairing = PairingMap::new(prep.strata(), ds.k())?;
    let search = grid_then_golden(&cfg.grid, cfg.tol, |tau| {
        variance_with(&prep, &pairing, theta_from_tau(tau)?).map(|e| e.value)
    })?;
    let theta_hat = theta_from_tau(search.tau)?;
    let at_optimum = variance_with(&prep, &pairing, theta_hat)?;
    Ok(FitResult2SE {
        tau_hat: search.tau,
        theta_hat,
        beta_hat: at_optimum.beta_mean,
        objective_value: at_optimum.value,
        objective_trace: search.trace,
        x_star: at_optimum.trim.x_star,
        x_double_star: at_optimum.trim.x_double_star,
        kept_n: at_optimum.trim.kept.len() - at_optimum.dropped,
        dropped: at_optimum.dropped,
        evaluations: search.evaluations + 1,
    })
}
