//! Competing-risks observations, risk pooling and covariate strata.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::{Error, Result};

/// Maximum number of distinct covariate vectors accepted by [`stratify`].
pub const MAX_STRATA: usize = 64;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Observation {
    /// Observed duration `min(T, C)`.
    pub x: f64,
    /// 0 = censored / other, `1..=m` = cause.
    pub delta: u32,
    pub z: Vec<f64>,
}

impl Observation {
    pub fn new(x: f64, delta: u32, z: Vec<f64>) -> Self {
        Self { x, delta, z }
    }

    pub fn is_event(&self) -> bool {
        self.delta == 1
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Dataset {
    rows: Vec<Observation>,
    k: usize,
}

impl Dataset {
    pub fn new(rows: Vec<Observation>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::Data(format!(
                "need at least 2 observations, got {}",
                rows.len()
            )));
        }
        let k = rows[0].z.len();
        for (i, row) in rows.iter().enumerate() {
            if !(row.x > 0.0) || !row.x.is_finite() {
                return Err(Error::Data(format!(
                    "row {i}: duration must be positive, got {}",
                    row.x
                )));
            }
            if row.z.len() != k {
                return Err(Error::Data(format!(
                    "row {i}: expected {k} covariates, got {}",
                    row.z.len()
                )));
            }
            if row.z.iter().any(|v| !v.is_finite()) {
                return Err(Error::Data(format!("row {i}: non-finite covariate")));
            }
        }
        Ok(Self { rows, k })
    }

    pub fn rows(&self) -> &[Observation] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Covariate dimension.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn into_rows(self) -> Vec<Observation> {
        self.rows
    }

    pub fn event_fraction(&self) -> f64 {
        self.rows.iter().filter(|r| r.is_event()).count() as f64 / self.len() as f64
    }

    /// Binary recoding: the target risk becomes 1, every other label
    /// (including censoring) becomes 0.
    pub fn pool_risks(&self, target: u32) -> Result<Dataset> {
        if target == 0 || !self.rows.iter().any(|r| r.delta == target) {
            return Err(Error::MissingRisk(target));
        }
        let rows = self
            .rows
            .iter()
            .map(|r| Observation {
                x: r.x,
                delta: u32::from(r.delta == target),
                z: r.z.clone(),
            })
            .collect();
        Ok(Dataset { rows, k: self.k })
    }
}

/// A group of rows sharing one covariate vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Stratum {
    pub z: Vec<f64>,
    pub rows: Vec<usize>,
}

/// Partition of a dataset's rows by covariate vector, ordered
/// lexicographically on `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct StrataIndex {
    strata: Vec<Stratum>,
    row_stratum: Vec<usize>,
}

impl StrataIndex {
    pub fn strata(&self) -> &[Stratum] {
        &self.strata
    }

    pub fn len(&self) -> usize {
        self.strata.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strata.is_empty()
    }

    /// Stratum position of row `i`.
    pub fn stratum_of(&self, i: usize) -> usize {
        self.row_stratum[i]
    }

    /// Index of the largest stratum; ties go to the lexicographically first.
    pub fn largest(&self) -> usize {
        let mut best = 0;
        for (s, st) in self.strata.iter().enumerate() {
            if st.rows.len() > self.strata[best].rows.len() {
                best = s;
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq)]
struct ZKey(Vec<f64>);

impl Eq for ZKey {}

impl PartialOrd for ZKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ZKey {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.0.iter().zip(&other.0) {
            match a.total_cmp(b) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        self.0.len().cmp(&other.0.len())
    }
}

pub fn stratify(ds: &Dataset) -> Result<StrataIndex> {
    let mut groups: BTreeMap<ZKey, Vec<usize>> = BTreeMap::new();
    for (i, row) in ds.rows().iter().enumerate() {
        // -0.0 and 0.0 are the same covariate value
        let key = ZKey(
            row.z
                .iter()
                .map(|&v| if v == 0.0 { 0.0 } else { v })
                .collect(),
        );
        groups.entry(key).or_default().push(i);
        if groups.len() > MAX_STRATA {
            let found = count_distinct(ds);
            return Err(Error::TooManyStrata {
                found,
                limit: MAX_STRATA,
            });
        }
    }
    let mut row_stratum = alloc::vec![0; ds.len()];
    let strata: Vec<Stratum> = groups
        .into_iter()
        .enumerate()
        .map(|(s, (key, rows))| {
            for &i in &rows {
                row_stratum[i] = s;
            }
            Stratum { z: key.0, rows }
        })
        .collect();
    Ok(StrataIndex {
        strata,
        row_stratum,
    })
}

fn count_distinct(ds: &Dataset) -> usize {
    let mut keys: Vec<ZKey> = ds.rows().iter().map(|r| ZKey(r.z.clone())).collect();
    keys.sort();
    keys.dedup();
    keys.len()
}
