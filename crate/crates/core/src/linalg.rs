//! Dense least squares for the small regressions in [`crate::mempool`].

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Solves `min ||X b - y||` by Householder QR. `rows` holds the design
/// matrix row by row, each with the same number of columns.
pub(crate) fn lstsq(rows: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    let n = rows.len();
    let k = rows.first().map_or(0, |r| r.len());
    if n < k || k == 0 {
        return Err(Error::Fit(format!("{n} observations for {k} coefficients")));
    }
    // Column-major copy so reflections touch contiguous memory.
    let mut a: Vec<Vec<f64>> = (0..k).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
    let mut b = y.to_vec();
    let scale = a
        .iter()
        .map(|c| libm::sqrt(c.iter().map(|x| x * x).sum::<f64>()))
        .fold(0.0, f64::max);
    for j in 0..k {
        let norm = libm::sqrt(a[j][j..].iter().map(|x| x * x).sum::<f64>());
        if norm <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Fit(format!("design matrix is rank deficient at column {j}")));
        }
        let alpha = if a[j][j] > 0.0 { -norm } else { norm };
        let mut v = vec![0.0; n - j];
        v[0] = a[j][j] - alpha;
        v[1..].copy_from_slice(&a[j][j + 1..]);
        let vv: f64 = v.iter().map(|x| x * x).sum();
        if vv > 0.0 {
            for col in a.iter_mut().skip(j) {
                let d: f64 = v.iter().zip(&col[j..]).map(|(p, q)| p * q).sum::<f64>() * 2.0 / vv;
                for (x, p) in col[j..].iter_mut().zip(&v) {
                    *x -= d * p;
                }
            }
            let d: f64 = v.iter().zip(&b[j..]).map(|(p, q)| p * q).sum::<f64>() * 2.0 / vv;
            for (x, p) in b[j..].iter_mut().zip(&v) {
                *x -= d * p;
            }
        }
    }
    let mut coef = vec![0.0; k];
    for j in (0..k).rev() {
        let mut s = b[j];
        for i in j + 1..k {
            s -= a[i][j] * coef[i];
        }
        coef[j] = s / a[j][j];
    }
    Ok(coef)
}
