//! Copula-graphic estimator of the latent marginal survival `S_theta(x|z)`.
//!
//! With a known generator the latent survival solves
//! `phi^-1(S(x)) = -int_0^x (phi^-1)'(pi(u)) dF_t(u)`. On the empirical
//! inputs the integral is accumulated jump by jump: over a cause-1 jump at
//! `u` the overall survival is taken to fall from `pi(u-)` by the factor
//! `exp(-dL)`, `dL = dF_t(u) / pi(u-)`, and the integral over that stretch
//! is evaluated exactly as `phi^-1(pi(u-) exp(-dL)) - phi^-1(pi(u-))`.
//!
//! At `theta = 0` each increment is exactly `dL`, so the estimate is
//! `exp(-Nelson-Aalen)`. For every `theta` the result is the exact
//! copula-graphic curve of a proper continuous `(pi, F_t)` pair, hence it
//! is nonincreasing in `theta` and never falls below `pi`.
//!
//! Ties: events at `u` are processed before censorings at `u`, i.e. the
//! integrand uses the left limit `pi(u-)`.

use alloc::format;
use alloc::vec::Vec;

use crate::copula::{Clayton, Generator};
use crate::first_stage::StepFunction;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CgeCurve {
    pub theta: f64,
    pub curve: StepFunction,
}

impl CgeCurve {
    /// Right-continuous lookup of `S(t)`.
    pub fn evaluate(&self, t: f64) -> f64 {
        self.curve.eval(t)
    }

    /// Cause-1 event times, where the curve can move.
    pub fn event_times(&self) -> &[f64] {
        self.curve.jump_times()
    }
}

/// Copula-graphic estimate for the Clayton copula.
pub fn copula_graphic(pi: &StepFunction, sub: &StepFunction, copula: &Clayton) -> Result<CgeCurve> {
    Ok(CgeCurve {
        theta: copula.theta(),
        curve: copula_graphic_with(pi, sub, copula)?,
    })
}

/// Copula-graphic estimate for any Archimedean generator.
pub fn copula_graphic_with<G: Generator>(
    pi: &StepFunction,
    sub: &StepFunction,
    generator: &G,
) -> Result<StepFunction> {
    let mut times = Vec::with_capacity(sub.jump_times().len());
    let mut values = Vec::with_capacity(sub.jump_times().len());
    let mut acc = 0.0;
    for (u, d_f) in sub.jumps() {
        if d_f <= 0.0 {
            continue;
        }
        let p = pi.left_limit(u);
        if !(p > 0.0) {
            return Err(Error::DivergentIntegrand { time: u });
        }
        acc += generator.phi_inv_increment(p, d_f / p);
        times.push(u);
        values.push(generator.phi(acc).clamp(0.0, 1.0));
    }
    StepFunction::new(1.0, times, values)
}

/// Rows kept for the semiparametric criterion after support trimming.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Trim {
    /// Upper bound: beyond it at least one stratum's curve has plateaued.
    pub x_star: f64,
    /// Lower bound: below it at least one stratum's curve is still 1.
    pub x_double_star: f64,
    pub kept: Vec<usize>,
}

/// Restricts `durations` to `[x**, x*]`, the range where every stratum's
/// curve has left 1 and has not yet passed its last cause-1 event.
pub fn trim_support(curves: &[CgeCurve], durations: &[f64]) -> Result<Trim> {
    let mut x_star = f64::INFINITY;
    let mut x_double_star = f64::NEG_INFINITY;
    for (s, c) in curves.iter().enumerate() {
        let (Some(&first), Some(&last)) = (c.event_times().first(), c.event_times().last()) else {
            return Err(Error::EmptyTrim(format!(
                "stratum {s} has no cause-1 events"
            )));
        };
        x_star = x_star.min(last);
        x_double_star = x_double_star.max(first);
    }
    if curves.is_empty() {
        return Err(Error::EmptyTrim("no strata".into()));
    }
    let kept: Vec<usize> = durations
        .iter()
        .enumerate()
        .filter(|(_, &x)| x >= x_double_star && x <= x_star)
        .map(|(i, _)| i)
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyTrim(format!(
            "strata event supports do not overlap (x** = {x_double_star}, x* = {x_star})"
        )));
    }
    Ok(Trim {
        x_star,
        x_double_star,
        kept,
    })
}
