//! Parametric marginal duration models.
//!
//! AFT form: `log([alpha t exp(z'beta)]^sigma) = W` with `W` drawn from a
//! known standard law `S_W`, so `S(t|z) = S_W(sigma * log(alpha t e^{z'beta}))`.
//! PH form: `S(t|z) = exp(-Lambda_0(t) exp(z'beta))` with `Lambda_0` the
//! family's cumulative hazard at `z = 0`.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::special::{normal_quantile, normal_sf};
use crate::{Error, Result};
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Family {
    Exponential,
    Weibull,
    LogLogistic,
    LogNormal,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::Exponential,
        Family::Weibull,
        Family::LogLogistic,
        Family::LogNormal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Exponential => "exponential",
            Family::Weibull => "weibull",
            Family::LogLogistic => "loglogistic",
            Family::LogNormal => "lognormal",
        }
    }

    /// Whether `sigma` is estimated (it is fixed at 1 for the exponential).
    pub fn has_shape(self) -> bool {
        !matches!(self, Family::Exponential)
    }

    /// Survival function of the standardized error `W`.
    pub fn sw(self, w: f64) -> f64 {
        match self {
            Family::Exponential | Family::Weibull => (-w.exp()).exp(),
            Family::LogLogistic => 1.0 / (1.0 + w.exp()),
            Family::LogNormal => normal_sf(w),
        }
    }

    /// `-log S_W(w)`, computed without forming `S_W` where that loses digits.
    pub fn neg_log_sw(self, w: f64) -> f64 {
        match self {
            Family::Exponential | Family::Weibull => w.exp(),
            Family::LogLogistic => {
                if w > 30.0 {
                    w + (-w).exp().ln_1p()
                } else {
                    w.exp().ln_1p()
                }
            }
            Family::LogNormal => -normal_sf(w).ln(),
        }
    }

    pub fn sw_inverse(self, s: f64) -> Result<f64> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::Domain(format!(
                "S_W inverse needs s in (0, 1), got {s}"
            )));
        }
        Ok(match self {
            Family::Exponential | Family::Weibull => (-s.ln()).ln(),
            Family::LogLogistic => ((1.0 - s) / s).ln(),
            Family::LogNormal => -normal_quantile(s),
        })
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exponential" | "expo" | "exp" => Ok(Family::Exponential),
            "weibull" | "weib" => Ok(Family::Weibull),
            "loglogistic" | "log-logistic" | "llog" => Ok(Family::LogLogistic),
            "lognormal" | "log-normal" | "lnorm" => Ok(Family::LogNormal),
            other => Err(Error::Domain(format!("unknown family `{other}`"))),
        }
    }
}

fn linear_predictor(beta: &[f64], z: &[f64]) -> f64 {
    beta.iter().zip(z).map(|(b, v)| b * v).sum()
}

fn check_params(alpha: f64, sigma: f64, beta: &[f64]) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Domain(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Domain(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::Domain("beta must be finite".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AftModel {
    pub family: Family,
    pub alpha: f64,
    pub beta: Vec<f64>,
    pub sigma: f64,
}

impl AftModel {
    pub fn new(family: Family, alpha: f64, beta: Vec<f64>, sigma: f64) -> Result<Self> {
        let sigma = if family.has_shape() { sigma } else { 1.0 };
        check_params(alpha, sigma, &beta)?;
        Ok(Self {
            family,
            alpha,
            beta,
            sigma,
        })
    }

    /// `w = sigma * log(alpha t exp(z'beta))`.
    pub fn standardized(&self, t: f64, z: &[f64]) -> f64 {
        self.sigma * (self.alpha.ln() + t.ln() + linear_predictor(&self.beta, z))
    }

    pub fn cumulative_hazard(&self, t: f64, z: &[f64]) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        self.family.neg_log_sw(self.standardized(t, z))
    }

    pub fn survival(&self, t: f64, z: &[f64]) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        self.family.sw(self.standardized(t, z))
    }

    /// `t` with `survival(t, z) = u`.
    pub fn inverse_survival(&self, u: f64, z: &[f64]) -> Result<f64> {
        let w = self.family.sw_inverse(u)?;
        Ok((w / self.sigma - self.alpha.ln() - linear_predictor(&self.beta, z)).exp())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PhModel {
    /// Family of the baseline (`z = 0`) cumulative hazard.
    pub family: Family,
    pub alpha: f64,
    pub beta: Vec<f64>,
    pub sigma: f64,
}

impl PhModel {
    pub fn new(family: Family, alpha: f64, beta: Vec<f64>, sigma: f64) -> Result<Self> {
        let sigma = if family.has_shape() { sigma } else { 1.0 };
        check_params(alpha, sigma, &beta)?;
        Ok(Self {
            family,
            alpha,
            beta,
            sigma,
        })
    }

    pub fn baseline_cumulative_hazard(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        self.family.neg_log_sw(self.sigma * (self.alpha * t).ln())
    }

    pub fn cumulative_hazard(&self, t: f64, z: &[f64]) -> f64 {
        self.baseline_cumulative_hazard(t) * linear_predictor(&self.beta, z).exp()
    }

    pub fn survival(&self, t: f64, z: &[f64]) -> f64 {
        (-self.cumulative_hazard(t, z)).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn aft(f: Family, alpha: f64, beta: f64, sigma: f64) -> AftModel {
        AftModel::new(f, alpha, vec![beta], sigma).unwrap()
    }

    #[test]
    fn cumulative_hazard_examples() {
        let w = aft(Family::Weibull, 1.0, 0.0, 1.5);
        assert!((w.cumulative_hazard(1.0, &[0.0]) - 1.0).abs() < 1e-15);
        let e = aft(Family::Exponential, 2.0, 0.0, 7.0);
        assert_eq!(e.sigma, 1.0);
        assert!((e.cumulative_hazard(3.0, &[0.0]) - 6.0).abs() < 1e-14);
        for f in Family::ALL {
            assert_eq!(aft(f, 1.3, 0.4, 1.2).cumulative_hazard(0.0, &[1.0]), 0.0);
        }
    }

    #[test]
    fn survival_examples() {
        let w = aft(Family::Weibull, 1.0, 0.0, 1.0);
        assert_eq!(w.survival(0.0, &[0.0]), 1.0);
        assert!((w.survival(1.0, &[0.0]) - libm::exp(-1.0)).abs() < 1e-15);
        for f in Family::ALL {
            let m = aft(f, 0.7, -0.3, 1.4);
            for &t in &[0.1, 0.8, 2.5] {
                let z = [1.0];
                let via_w = f.sw(libm::log(libm::pow(0.7 * t * libm::exp(-0.3), m.sigma)));
                assert!((m.survival(t, &z) - via_w).abs() < 1e-13);
                assert!((m.survival(t, &z) - libm::exp(-m.cumulative_hazard(t, &z))).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn sw_inverse_examples() {
        assert!(Family::Weibull.sw_inverse(libm::exp(-1.0)).unwrap().abs() < 1e-15);
        assert_eq!(Family::LogLogistic.sw_inverse(0.5).unwrap(), 0.0);
        assert_eq!(Family::LogNormal.sw_inverse(0.5).unwrap(), 0.0);
        for f in Family::ALL {
            assert!(f.sw_inverse(0.0).is_err());
            assert!(f.sw_inverse(1.0).is_err());
            let mut prev = f64::INFINITY;
            for i in 1..200 {
                let s = i as f64 / 200.0;
                let w = f.sw_inverse(s).unwrap();
                assert!(w < prev);
                prev = w;
                assert!((f.sw(w) - s).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn inverse_survival_examples() {
        let w = aft(Family::Weibull, 1.0, 0.0, 1.0);
        assert!((w.inverse_survival(libm::exp(-1.0), &[0.0]).unwrap() - 1.0).abs() < 1e-14);
        for f in Family::ALL {
            let m = aft(f, 1.0, 1.0, 1.5);
            let median = m.inverse_survival(0.5, &[1.0]).unwrap();
            assert!(m.inverse_survival(1.0 - 1e-12, &[1.0]).unwrap() < 0.05 * median);
            for i in 1..100 {
                let u = i as f64 / 100.0;
                let t = m.inverse_survival(u, &[1.0]).unwrap();
                assert!((m.survival(t, &[1.0]) - u).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn hazard_increasing() {
        for f in Family::ALL {
            let m = aft(f, 1.2, 0.5, 1.5);
            let h = 1e-6;
            for i in 1..60 {
                let t = i as f64 * 0.1;
                let d = (m.cumulative_hazard(t + h, &[1.0]) - m.cumulative_hazard(t - h, &[1.0]))
                    / (2.0 * h);
                assert!(d > 0.0, "{f} at {t}");
            }
        }
    }

    #[test]
    fn ph_examples() {
        let ph = PhModel::new(Family::Weibull, 1.0, vec![0.8], 1.5).unwrap();
        assert_eq!(ph.survival(0.0, &[1.0]), 1.0);
        let base = aft(Family::Weibull, 1.0, 0.0, 1.5);
        assert!((ph.survival(0.9, &[0.0]) - base.survival(0.9, &[0.0])).abs() < 1e-15);
        // Weibull PH with beta_ph equals Weibull AFT with beta_ph / sigma
        for &sigma in &[0.5, 1.0, 1.5, 3.0] {
            for &b in &[-1.0, 0.3, 1.5] {
                let ph = PhModel::new(Family::Weibull, 1.3, vec![b], sigma).unwrap();
                let a = aft(Family::Weibull, 1.3, b / sigma, sigma);
                for &t in &[0.2, 1.0, 2.7] {
                    for &z in &[0.0, 1.0, -2.0] {
                        assert!((ph.survival(t, &[z]) - a.survival(t, &[z])).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_bad_params() {
        assert!(AftModel::new(Family::Weibull, -1.0, vec![], 1.0).is_err());
        assert!(AftModel::new(Family::Weibull, 1.0, vec![], 0.0).is_err());
        assert!("gompertz".parse::<Family>().is_err());
        assert_eq!("weib".parse::<Family>().unwrap(), Family::Weibull);
    }
}
