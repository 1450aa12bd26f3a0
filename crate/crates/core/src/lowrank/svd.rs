use faer::{Mat, MatRef};

use crate::error::{Error, Result};

/// Thin singular value decomposition `A = U diag(s) V^T`, `k = min(m, n)`.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    /// `m x k`, orthonormal columns.
    pub u: Mat<f64>,
    /// Nonincreasing, nonnegative.
    pub singular_values: Vec<f64>,
    /// `n x k`, orthonormal columns.
    pub v: Mat<f64>,
}

impl SvdFactors {
    /// `U_r diag(s_r) V_r^T`.
    pub fn truncated(&self, r: usize) -> Mat<f64> {
        let r = r.min(self.singular_values.len());
        let (m, n) = (self.u.nrows(), self.v.nrows());
        let mut us = self.u.as_ref().subcols(0, r).to_owned();
        for j in 0..r {
            let s = self.singular_values[j];
            for x in us.col_as_slice_mut(j) {
                *x *= s;
            }
        }
        if r == 0 {
            return Mat::zeros(m, n);
        }
        us * self.v.as_ref().subcols(0, r).transpose()
    }

    /// Leading `r` right singular vectors.
    pub fn right_block(&self, r: usize) -> MatRef<'_, f64> {
        self.v.as_ref().subcols(0, r)
    }
}

fn check_finite(a: MatRef<'_, f64>) -> Result<()> {
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            if !a[(i, j)].is_finite() {
                return Err(Error::Numerical(format!("non-finite entry at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

/// Thin SVD via bidiagonalisation (faer).
pub fn svd(a: MatRef<'_, f64>) -> Result<SvdFactors> {
    check_finite(a)?;
    let (m, n) = (a.nrows(), a.ncols());
    if m == 0 || n == 0 {
        return Ok(SvdFactors {
            u: Mat::zeros(m, 0),
            singular_values: Vec::new(),
            v: Mat::zeros(n, 0),
        });
    }
    let f = a
        .thin_svd()
        .map_err(|e| Error::Numerical(format!("SVD did not converge: {e:?}")))?;
    let singular_values = f.S().column_vector().iter().copied().collect();
    Ok(SvdFactors {
        u: f.U().to_owned(),
        singular_values,
        v: f.V().to_owned(),
    })
}

/// Singular values only, nonincreasing.
pub fn singular_values(a: MatRef<'_, f64>) -> Result<Vec<f64>> {
    check_finite(a)?;
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(Vec::new());
    }
    a.singular_values()
        .map_err(|e| Error::Numerical(format!("SVD did not converge: {e:?}")))
}

/// Smallest `r` with `s[r] / s_ref < eps`, where `s_ref` is `reference`
/// when supplied and `s[0]` otherwise. Returns `s.len()` when no value falls
/// below the threshold.
pub fn epsilon_rank(singular_values: &[f64], eps: f64, reference: Option<f64>) -> usize {
    let Some(&first) = singular_values.first() else {
        return 0;
    };
    let s_ref = reference.unwrap_or(first);
    if !(s_ref > 0.0) {
        return 0;
    }
    singular_values
        .iter()
        .position(|&s| s / s_ref < eps)
        .unwrap_or(singular_values.len())
}
