//! Grid search over Kendall's tau followed by golden-section refinement.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::{Error, Result};
#[allow(unused_imports)]
use num_traits::Float;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Evenly spaced tau values `lo, lo + step, ..., hi` inside `(-1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TauGrid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Default for TauGrid {
    fn default() -> Self {
        Self {
            lo: -0.9,
            hi: 0.9,
            step: 0.05,
        }
    }
}

impl TauGrid {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self> {
        let g = Self { lo, hi, step };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo > -1.0 && self.hi < 1.0 && self.lo <= self.hi && self.step > 0.0) {
            return Err(Error::Domain(format!(
                "tau grid {}:{}:{} must satisfy -1 < lo <= hi < 1 and step > 0",
                self.lo, self.hi, self.step
            )));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let count = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| (self.lo + i as f64 * self.step).min(self.hi))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TracePoint {
    pub tau: f64,
    /// `None` when the criterion could not be evaluated at this tau.
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub tau: f64,
    pub value: f64,
    pub trace: Vec<TracePoint>,
    pub evaluations: usize,
}

/// Golden-section minimization of `f` on `[a, b]`; returns `(x, f(x))`.
pub fn golden_section<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> (f64, f64, usize) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut evals = 2;
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        evals += 1;
    }
    if fc <= fd {
        (c, fc, evals)
    } else {
        (d, fd, evals)
    }
}

/// Evaluates `criterion` on every grid point, then refines with golden
/// section inside the cell pair around the best grid point. The refined
/// point replaces the grid winner only if it is at least as good.
pub fn grid_then_golden<F>(grid: &TauGrid, tol: f64, mut criterion: F) -> Result<SearchOutcome>
where
    F: FnMut(f64) -> Result<f64>,
{
    grid.validate()?;
    let points = grid.points();
    let mut trace = Vec::with_capacity(points.len());
    let mut best: Option<(usize, f64)> = None;
    let mut last_err: Option<String> = None;
    for (i, &tau) in points.iter().enumerate() {
        let value = match criterion(tau) {
            Ok(v) if v.is_finite() => Some(v),
            Ok(v) => {
                last_err = Some(format!("criterion is {v} at tau = {tau}"));
                None
            }
            Err(e) => {
                last_err = Some(e.to_string());
                None
            }
        };
        if let Some(v) = value {
            if best.map_or(true, |(_, bv)| v < bv) {
                best = Some((i, v));
            }
        }
        trace.push(TracePoint { tau, value });
    }
    let Some((bi, bv)) = best else {
        return Err(Error::AllGridFailed(
            last_err.unwrap_or_else(|| "empty grid".into()),
        ));
    };
    let mut evaluations = points.len();
    let lo = points[bi.saturating_sub(1)];
    let hi = points[(bi + 1).min(points.len() - 1)];
    let (mut tau, mut value) = (points[bi], bv);
    if hi > lo {
        let (t, v, n) = golden_section(
            |t| {
                criterion(t)
                    .ok()
                    .filter(|v| v.is_finite())
                    .unwrap_or(f64::INFINITY)
            },
            lo,
            hi,
            tol,
        );
        evaluations += n;
        if v <= value {
            tau = t;
            value = v;
        }
    }
    Ok(SearchOutcome {
        tau,
        value,
        trace,
        evaluations,
    })
}
