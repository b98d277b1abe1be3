//! Nonparametric first stage: empirical survivor of the observed minimum
//! and the empirical cause-1 sub-distribution, per stratum.

use alloc::vec::Vec;

use crate::{Error, Result};

/// Right-continuous piecewise-constant function on `[0, inf)`.
///
/// Takes `initial` on `[0, times[0])` and `values[i]` on
/// `[times[i], times[i + 1])`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StepFunction {
    initial: f64,
    times: Vec<f64>,
    values: Vec<f64>,
}

impl StepFunction {
    pub fn new(initial: f64, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::Data(
                "step function needs one value per jump time".into(),
            ));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) || times.first().is_some_and(|&t| !(t > 0.0)) {
            return Err(Error::Data(
                "jump times must be positive and strictly increasing".into(),
            ));
        }
        Ok(Self {
            initial,
            times,
            values,
        })
    }

    pub fn constant(value: f64) -> Self {
        Self {
            initial: value,
            times: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn initial(&self) -> f64 {
        self.initial
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, t: f64) -> f64 {
        let idx = self.times.partition_point(|&u| u <= t);
        if idx == 0 {
            self.initial
        } else {
            self.values[idx - 1]
        }
    }

    /// Left limit `f(t-)`.
    pub fn left_limit(&self, t: f64) -> f64 {
        let idx = self.times.partition_point(|&u| u < t);
        if idx == 0 {
            self.initial
        } else {
            self.values[idx - 1]
        }
    }

    pub fn final_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(self.initial)
    }

    /// `(time, jump size)` pairs.
    pub fn jumps(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().enumerate().map(move |(i, &t)| {
            let before = if i == 0 {
                self.initial
            } else {
                self.values[i - 1]
            };
            (t, self.values[i] - before)
        })
    }
}

fn sorted_durations(rows: &[(f64, bool)]) -> Result<Vec<(f64, bool)>> {
    if rows.is_empty() {
        return Err(Error::Data("empty stratum".into()));
    }
    let mut sorted = rows.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(sorted)
}

/// `pi(x) = #{x_i > x} / n` over one stratum; rows are `(x, is_event)`.
pub fn overall_survival(rows: &[(f64, bool)]) -> Result<StepFunction> {
    let sorted = sorted_durations(rows)?;
    let n = sorted.len() as f64;
    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let t = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == t {
            i += 1;
        }
        times.push(t);
        values.push((sorted.len() - i) as f64 / n);
    }
    Ok(StepFunction {
        initial: 1.0,
        times,
        values,
    })
}

/// `F_t(x) = #{x_i <= x, event} / n` over one stratum.
pub fn sub_distribution(rows: &[(f64, bool)]) -> Result<StepFunction> {
    let sorted = sorted_durations(rows)?;
    let n = sorted.len() as f64;
    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut count = 0usize;
    let mut i = 0;
    while i < sorted.len() {
        let t = sorted[i].0;
        let before = count;
        while i < sorted.len() && sorted[i].0 == t {
            count += usize::from(sorted[i].1);
            i += 1;
        }
        if count > before {
            times.push(t);
            values.push(count as f64 / n);
        }
    }
    Ok(StepFunction {
        initial: 0.0,
        times,
        values,
    })
}
