//! Statistical leverage and coherence.

use faer::{Mat, MatRef};

use super::norms::r_factor;
use super::svd::svd;
use crate::error::{Error, Result};

/// Relative tolerance below which `sigma_r == sigma_{r+1}` is reported.
pub const DEGENERATE_GAP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LeverageScores {
    pub scores: Vec<f64>,
    /// `sigma_r` and `sigma_{r+1}` coincide, so the rank-`r` subspace (and
    /// with it the scores) is not unique.
    pub degenerate_gap: bool,
}

impl LeverageScores {
    pub fn coherence(&self) -> f64 {
        self.scores.iter().copied().fold(0.0, f64::max)
    }
}

fn check_rank(a: MatRef<'_, f64>, r: usize) -> Result<()> {
    let k = a.nrows().min(a.ncols());
    if r == 0 || r > k {
        return Err(Error::invalid(format!(
            "leverage rank must satisfy 1 <= r <= min(m, n) = {k}, got {r}"
        )));
    }
    Ok(())
}

fn degenerate(s: &[f64], r: usize) -> bool {
    match s.get(r) {
        Some(&next) => (s[r - 1] - next).abs() <= DEGENERATE_GAP_TOL * s[0],
        None => false,
    }
}

fn squared_row_norms(b: MatRef<'_, f64>, r: usize) -> Vec<f64> {
    (0..b.nrows())
        .map(|i| (0..r).map(|k| b[(i, k)] * b[(i, k)]).sum())
        .collect()
}

/// Column leverage: `l_j = ||V_r[j, :]||^2`.
pub fn leverage_scores(a: MatRef<'_, f64>, r: usize) -> Result<LeverageScores> {
    check_rank(a, r)?;
    // V is unchanged by a left orthogonal factor.
    let f = if a.nrows() > 2 * a.ncols() {
        svd(r_factor(a).as_ref())?
    } else {
        svd(a)?
    };
    Ok(LeverageScores {
        scores: squared_row_norms(f.v.as_ref(), r),
        degenerate_gap: degenerate(&f.singular_values, r),
    })
}

/// Row leverage: `l_i = ||U_r[i, :]||^2`, i.e. the column leverage of `A^T`.
///
/// For tall `A`, `U_r = A V_r diag(sigma_r)^{-1}` with `V`, `sigma` from the
/// triangular factor, so no `m x n` orthogonal factor is formed.
pub fn row_leverage_scores(a: MatRef<'_, f64>, r: usize) -> Result<LeverageScores> {
    check_rank(a, r)?;
    if a.nrows() <= 2 * a.ncols() {
        let f = svd(a)?;
        return Ok(LeverageScores {
            scores: squared_row_norms(f.u.as_ref(), r),
            degenerate_gap: degenerate(&f.singular_values, r),
        });
    }
    let f = svd(r_factor(a).as_ref())?;
    let s = &f.singular_values;
    if !(s[r - 1] > 0.0) {
        return Err(Error::Numerical(format!(
            "sigma_{r} is zero; rank-{r} leverage undefined"
        )));
    }
    let scaled = Mat::from_fn(a.ncols(), r, |i, k| f.v[(i, k)] / s[k]);
    let u = a * scaled;
    Ok(LeverageScores {
        scores: squared_row_norms(u.as_ref(), r),
        degenerate_gap: degenerate(s, r),
    })
}

/// `gamma^(r) = max_j l_j`, over columns.
pub fn coherence(a: MatRef<'_, f64>, r: usize) -> Result<f64> {
    Ok(leverage_scores(a, r)?.coherence())
}
