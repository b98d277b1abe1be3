//! Clayton Archimedean copula.
//!
//! The generator is written in the decreasing form
//! `phi(u) = (1 + theta * u)_+^(-1/theta)` with `phi(u) = exp(-u)` at
//! `theta = 0`, so that an Archimedean copula reads
//! `K(u, v) = phi(phi^-1(u) + phi^-1(v))`. Kendall's tau is
//! `theta / (theta + 2)`.

use alloc::format;

use crate::{Error, Result};
#[allow(unused_imports)]
use num_traits::Float;

/// Below this magnitude the exponential / logarithmic limit branches are used.
pub const THETA_ZERO_TOL: f64 = 1e-8;

const BISECTION_TOL: f64 = 1e-10;

/// An Archimedean generator as seen by the copula-graphic estimator.
///
/// Implementations may assume arguments are already inside the domain;
/// range checks belong to the concrete copula type.
pub trait Generator {
    fn phi(&self, u: f64) -> f64;

    fn phi_inv(&self, s: f64) -> f64;

    /// Derivative of `phi_inv` at `s`.
    fn phi_inv_deriv(&self, s: f64) -> f64;

    /// `phi_inv(s * exp(-hazard)) - phi_inv(s)`.
    ///
    /// Override when a cancellation-free closed form exists.
    fn phi_inv_increment(&self, s: f64, hazard: f64) -> f64 {
        self.phi_inv(s * (-hazard).exp()) - self.phi_inv(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Clayton {
    theta: f64,
}

impl Clayton {
    pub fn new(theta: f64) -> Result<Self> {
        if !(theta >= -1.0) || !theta.is_finite() {
            return Err(Error::Domain(format!(
                "Clayton theta must be finite and >= -1, got {theta}"
            )));
        }
        Ok(Self { theta })
    }

    pub fn from_tau(tau: f64) -> Result<Self> {
        Self::new(theta_from_tau(tau)?)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn tau(&self) -> f64 {
        self.theta / (self.theta + 2.0)
    }

    fn near_independence(&self) -> bool {
        self.theta.abs() < THETA_ZERO_TOL
    }

    pub fn generator(&self, u: f64) -> Result<f64> {
        if !(u >= 0.0) {
            return Err(Error::Domain(format!(
                "generator argument must be >= 0, got {u}"
            )));
        }
        Ok(self.phi(u))
    }

    pub fn generator_inverse(&self, s: f64) -> Result<f64> {
        check_unit(s)?;
        Ok(self.phi_inv(s))
    }

    pub fn generator_inverse_deriv(&self, s: f64) -> Result<f64> {
        check_unit(s)?;
        Ok(self.phi_inv_deriv(s))
    }

    /// Copula cdf `K(u, v)`.
    pub fn cdf(&self, u: f64, v: f64) -> f64 {
        if u <= 0.0 || v <= 0.0 {
            return 0.0;
        }
        if self.near_independence() {
            return u * v;
        }
        let base = u.powf(-self.theta) + v.powf(-self.theta) - 1.0;
        if base <= 0.0 {
            0.0
        } else {
            base.powf(-1.0 / self.theta)
        }
    }

    /// Conditional distribution `dK(u, v)/du`, nondecreasing in `v`.
    pub fn conditional_cdf(&self, u: f64, v: f64) -> f64 {
        if v <= 0.0 {
            return 0.0;
        }
        if v >= 1.0 {
            return 1.0;
        }
        if self.near_independence() {
            return v;
        }
        let t = self.theta;
        let base = u.powf(-t) + v.powf(-t) - 1.0;
        if base <= 0.0 {
            return 0.0;
        }
        (u.powf(-t - 1.0) * base.powf(-1.0 / t - 1.0)).min(1.0)
    }

    /// Solves `dK(u, v)/du = w` for `v`; the conditional-inversion sampler.
    pub fn conditional_v_given_u(&self, u: f64, w: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) || !(w > 0.0 && w < 1.0) {
            return Err(Error::Domain(format!(
                "conditional inversion needs u, w in (0,1), got u = {u}, w = {w}"
            )));
        }
        if self.near_independence() {
            return Ok(w);
        }
        let t = self.theta;
        if t > 0.0 {
            // log(a u^-t + 1) in a form that survives large theta
            let ln_a = (-t / (1.0 + t) * w.ln()).exp_m1().ln();
            let e = ln_a - t * u.ln();
            let l = if e > 0.0 {
                e + (-e).exp().ln_1p()
            } else {
                e.exp().ln_1p()
            };
            let v = (-l / t).exp();
            return Ok(v.clamp(f64::MIN_POSITIVE, 1.0));
        }
        self.bisect_conditional(u, w)
    }

    fn bisect_conditional(&self, u: f64, w: f64) -> Result<f64> {
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        if !(self.conditional_cdf(u, lo) <= w && self.conditional_cdf(u, hi) >= w) {
            return Err(Error::Convergence(format!(
                "no bracket for theta = {}, u = {u}, w = {w}",
                self.theta
            )));
        }
        while hi - lo > BISECTION_TOL {
            let mid = 0.5 * (lo + hi);
            if self.conditional_cdf(u, mid) < w {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

impl Generator for Clayton {
    fn phi(&self, u: f64) -> f64 {
        if self.near_independence() {
            return (-u).exp();
        }
        let base = 1.0 + self.theta * u;
        if base <= 0.0 {
            0.0
        } else {
            base.powf(-1.0 / self.theta)
        }
    }

    fn phi_inv(&self, s: f64) -> f64 {
        if self.near_independence() {
            return -s.ln();
        }
        (s.powf(-self.theta) - 1.0) / self.theta
    }

    fn phi_inv_deriv(&self, s: f64) -> f64 {
        -s.powf(-(self.theta + 1.0))
    }

    fn phi_inv_increment(&self, s: f64, hazard: f64) -> f64 {
        // ((s e^-h)^-theta - s^-theta) / theta = s^-theta expm1(theta h) / theta
        if self.near_independence() {
            return hazard;
        }
        s.powf(-self.theta) * (self.theta * hazard).exp_m1() / self.theta
    }
}

fn check_unit(s: f64) -> Result<()> {
    if s > 0.0 && s <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "survival argument must lie in (0, 1], got {s}"
        )))
    }
}

pub fn tau_from_theta(theta: f64) -> Result<f64> {
    Clayton::new(theta).map(|c| c.tau())
}

pub fn theta_from_tau(tau: f64) -> Result<f64> {
    if !(-1.0..1.0).contains(&tau) {
        return Err(Error::Domain(format!(
            "Kendall's tau must lie in [-1, 1), got {tau}"
        )));
    }
    Ok(2.0 * tau / (1.0 - tau))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(theta: f64) -> Clayton {
        Clayton::new(theta).unwrap()
    }

    #[test]
    fn generator_examples() {
        assert_eq!(c(3.7).generator(0.0).unwrap(), 1.0);
        assert!((c(0.0).generator(1.0).unwrap() - 0.36788).abs() < 1e-5);
        assert!((c(1.0).generator(1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((c(-1.0).generator(0.3).unwrap() - 0.7).abs() < 1e-15);
        // (.)_+ clamp in the non-strict region
        assert_eq!(c(-1.0).generator(1.5).unwrap(), 0.0);
    }

    #[test]
    fn generator_domain_errors() {
        assert!(matches!(c(1.0).generator(-0.1), Err(Error::Domain(_))));
        assert!(matches!(Clayton::new(-1.5), Err(Error::Domain(_))));
        assert!(Clayton::new(f64::NAN).is_err());
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(c(2.3).generator_inverse(1.0).unwrap(), 0.0);
        assert!((c(1.0).generator_inverse(0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!((c(0.0).generator_inverse(0.5).unwrap() - core::f64::consts::LN_2).abs() < 1e-15);
        assert!(c(1.0).generator_inverse(0.0).is_err());
        assert!(c(1.0).generator_inverse(1.2).is_err());
    }

    #[test]
    fn inverse_deriv_examples() {
        assert_eq!(c(0.0).generator_inverse_deriv(1.0).unwrap(), -1.0);
        assert!((c(1.0).generator_inverse_deriv(0.5).unwrap() + 4.0).abs() < 1e-14);
        assert!((c(0.0).generator_inverse_deriv(0.25).unwrap() + 4.0).abs() < 1e-14);
        assert!(c(0.0).generator_inverse_deriv(-0.25).is_err());
    }

    #[test]
    fn tau_map_examples() {
        assert!((tau_from_theta(8.0).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(tau_from_theta(0.0).unwrap(), 0.0);
        assert_eq!(tau_from_theta(-1.0).unwrap(), -1.0);
        assert!(theta_from_tau(1.0).is_err());
        assert_eq!(theta_from_tau(-1.0).unwrap(), -1.0);
    }

    #[test]
    fn increment_matches_difference() {
        for &t in &[-0.9, -0.3, 0.5, 2.0, 8.0] {
            let g = c(t);
            for &(s, h) in &[(0.9, 0.01), (0.3, 0.2), (0.05, 0.5)] {
                let direct = g.phi_inv(s * (-h).exp()) - g.phi_inv(s);
                let closed = g.phi_inv_increment(s, h);
                assert!((direct - closed).abs() < 1e-10 * direct.abs().max(1.0));
            }
        }
        assert_eq!(c(0.0).phi_inv_increment(0.4, 0.125), 0.125);
    }

    #[test]
    fn conditional_examples() {
        assert_eq!(c(0.0).conditional_v_given_u(0.4, 0.7).unwrap(), 0.7);
        let big = c(1e4);
        for &(u, w) in &[(0.2, 0.3), (0.5, 0.9), (0.8, 0.1)] {
            assert!((big.conditional_v_given_u(u, w).unwrap() - u).abs() < 1e-2);
        }
        // re-substitution
        let g = c(2.0);
        let v = g.conditional_v_given_u(0.5, 0.5).unwrap();
        assert!((g.conditional_cdf(0.5, v) - 0.5).abs() < 1e-12);
        for &t in &[-1.0, -0.8, -0.3] {
            let g = c(t);
            for &(u, w) in &[(0.2, 0.3), (0.5, 0.9), (0.8, 0.1)] {
                let v = g.conditional_v_given_u(u, w).unwrap();
                assert!((0.0..=1.0).contains(&v));
                if t > -1.0 {
                    assert!((g.conditional_cdf(u, v) - w).abs() < 1e-6, "theta {t}");
                } else {
                    assert!((v - (1.0 - u)).abs() < 1e-8);
                }
            }
        }
        assert!(c(1.0).conditional_v_given_u(0.0, 0.5).is_err());
    }

    #[test]
    fn cdf_boundaries() {
        for &t in &[-0.5, 0.0, 2.0] {
            let g = c(t);
            assert!((g.cdf(0.3, 1.0) - 0.3).abs() < 1e-12);
            assert!((g.cdf(1.0, 0.6) - 0.6).abs() < 1e-12);
        }
    }
}
