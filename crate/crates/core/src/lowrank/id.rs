//! Interpolative decomposition from a truncated pivoted QR.

use faer::{Mat, MatRef};

use super::pivoted_qr::factor;
use crate::error::{Error, Result};

/// `A ~= A[:, skeleton] * projection`, with `projection` (`r x n`) containing
/// the `r x r` identity in the skeleton columns.
#[derive(Debug, Clone, PartialEq)]
pub struct IdFactorization {
    /// Column indices of the factored matrix, in pivot order.
    pub skeleton: Vec<usize>,
    pub projection: Mat<f64>,
}

impl IdFactorization {
    /// The empty factorization of an `n`-column matrix.
    pub fn zero_rank(n: usize) -> Self {
        Self {
            skeleton: Vec::new(),
            projection: Mat::zeros(0, n),
        }
    }

    pub fn rank(&self) -> usize {
        self.skeleton.len()
    }

    pub fn ncols(&self) -> usize {
        self.projection.ncols()
    }

    /// `A[:, skeleton]`.
    pub fn skeleton_columns(&self, a: MatRef<'_, f64>) -> Mat<f64> {
        Mat::from_fn(a.nrows(), self.rank(), |i, j| a[(i, self.skeleton[j])])
    }

    /// `A[:, skeleton] * P`, using every row of `a`.
    pub fn reconstruct(&self, a: MatRef<'_, f64>) -> Mat<f64> {
        if self.rank() == 0 {
            return Mat::zeros(a.nrows(), self.ncols());
        }
        self.skeleton_columns(a) * &self.projection
    }

    /// Rows `rows` of `A[:, skeleton] * P`.
    pub fn reconstruct_rows(&self, a: MatRef<'_, f64>, rows: &[usize]) -> Mat<f64> {
        if self.rank() == 0 {
            return Mat::zeros(rows.len(), self.ncols());
        }
        let c = Mat::from_fn(rows.len(), self.rank(), |i, j| {
            a[(rows[i], self.skeleton[j])]
        });
        c * &self.projection
    }

    /// Equivalent skeleton charges `P q`.
    pub fn apply(&self, q: &[f64]) -> Result<Vec<f64>> {
        if q.len() != self.ncols() {
            return Err(Error::DimensionMismatch {
                expected: self.ncols(),
                found: q.len(),
            });
        }
        Ok((0..self.rank())
            .map(|i| (0..q.len()).map(|j| self.projection[(i, j)] * q[j]).sum())
            .collect())
    }
}

/// Rank-`r` ID: skeleton = first `r` pivots of a column-pivoted QR, and
/// `P = [I | R11^{-1} R12]` mapped back to the original column order.
///
/// Costs `O(m n r)`; only `r` Householder steps are taken.
pub fn interpolative_decomposition(a: MatRef<'_, f64>, r: usize) -> Result<IdFactorization> {
    let (m, n) = (a.nrows(), a.ncols());
    if r == 0 || r > m.min(n) {
        return Err(Error::invalid(format!(
            "ID rank must satisfy 1 <= r <= min(m, n) = {}, got {r}",
            m.min(n)
        )));
    }
    let f = factor(a.to_owned(), r);
    let rr = &f.a;
    let ratio = rr[(r - 1, r - 1)].abs() / rr[(0, 0)].abs();
    if !(ratio >= 10.0 * f64::EPSILON) {
        return Err(Error::IllConditionedSkeleton { rank: r, ratio });
    }

    let mut projection = Mat::<f64>::zeros(r, n);
    for (k, &col) in f.permutation[..r].iter().enumerate() {
        projection[(k, col)] = 1.0;
    }
    // Back substitution R11 x = R12[:, j] for each trailing column.
    let mut x = vec![0.0; r];
    for j in r..n {
        for i in (0..r).rev() {
            let mut acc = rr[(i, j)];
            for k in i + 1..r {
                acc -= rr[(i, k)] * x[k];
            }
            x[i] = acc / rr[(i, i)];
        }
        let col = f.permutation[j];
        for i in 0..r {
            projection[(i, col)] = x[i];
        }
    }
    Ok(IdFactorization {
        skeleton: f.permutation[..r].to_vec(),
        projection,
    })
}

/// `sqrt(1 + n r (n - r)) * sigma_{r+1}`.
pub fn bound_id(n: usize, r: usize, sigma_r1: f64) -> f64 {
    let (n, r) = (n as f64, r as f64);
    (1.0 + n * r * (n - r)).sqrt() * sigma_r1
}
