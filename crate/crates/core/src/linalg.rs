//! Small dense weighted least squares via Householder QR.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};
#[allow(unused_imports)]
use num_traits::Float;

/// Relative tolerance on the diagonal of `R` below which a column is
/// considered dependent on the preceding ones.
const RANK_TOL: f64 = 1e-10;

/// Minimizes `sum_i w_i (y_i - x_i' b)^2` for a row-major design `x`
/// with `p` columns.
pub(crate) fn weighted_least_squares(
    x: &[f64],
    y: &[f64],
    weights: Option<&[f64]>,
    p: usize,
) -> Result<Vec<f64>> {
    let n = y.len();
    if x.len() != n * p {
        return Err(Error::Estimation(format!(
            "design has {} entries, expected {}",
            x.len(),
            n * p
        )));
    }
    if n < p {
        return Err(Error::RankDeficient(format!(
            "{n} rows for {p} coefficients"
        )));
    }
    // column-major copy, rows scaled by sqrt(weight)
    let mut a = vec![0.0; n * p];
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        let s = match weights {
            Some(w) => {
                if !(w[i] >= 0.0) {
                    return Err(Error::Domain(format!("weight {i} is negative")));
                }
                w[i].sqrt()
            }
            None => 1.0,
        };
        for j in 0..p {
            a[j * n + i] = s * x[i * p + j];
        }
        rhs[i] = s * y[i];
    }
    let col_norm: Vec<f64> = (0..p)
        .map(|j| {
            a[j * n..(j + 1) * n]
                .iter()
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt()
        })
        .collect();

    for j in 0..p {
        let norm = a[j * n + j..(j + 1) * n]
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
        if !(norm > RANK_TOL * col_norm[j].max(f64::MIN_POSITIVE)) {
            return Err(Error::RankDeficient(format!(
                "column {j} is collinear with earlier columns"
            )));
        }
        let alpha = if a[j * n + j] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = a[j * n + j..(j + 1) * n].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for c in j..p {
                let col = &mut a[c * n + j..(c + 1) * n];
                let dot: f64 = v.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
                let f = 2.0 * dot / vnorm2;
                for (x, vi) in col.iter_mut().zip(&v) {
                    *x -= f * vi;
                }
            }
            let dot: f64 = v.iter().zip(&rhs[j..]).map(|(a, b)| a * b).sum();
            let f = 2.0 * dot / vnorm2;
            for (x, vi) in rhs[j..].iter_mut().zip(&v) {
                *x -= f * vi;
            }
        }
    }
    let mut b = vec![0.0; p];
    for j in (0..p).rev() {
        let mut s = rhs[j];
        for c in j + 1..p {
            s -= a[c * n + j] * b[c];
        }
        b[j] = s / a[j * n + j];
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::RankDeficient("non-finite coefficients".into()));
    }
    Ok(b)
}
