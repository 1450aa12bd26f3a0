//! Spectral norms: exact through a small SVD, or by power iteration.

use faer::{Mat, MatRef};
use rand_distr::{Distribution, StandardNormal};

use super::svd::singular_values;
use crate::error::Result;
use crate::rng::seeded;

/// Largest dimension for which [`spectral_norm`] uses an exact SVD.
pub const EXACT_SVD_LIMIT: usize = 1000;

/// A matrix known only through products with it and its transpose.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `y = A x`.
    fn apply(&self, x: &[f64], y: &mut [f64]);
    /// `x = A^T y`.
    fn apply_transpose(&self, y: &[f64], x: &mut [f64]);
}

impl LinearOperator for MatRef<'_, f64> {
    fn nrows(&self) -> usize {
        MatRef::nrows(self)
    }

    fn ncols(&self) -> usize {
        MatRef::ncols(self)
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            for (yi, aij) in y.iter_mut().zip(self.col(j).iter()) {
                *yi += aij * xj;
            }
        }
    }

    fn apply_transpose(&self, y: &[f64], x: &mut [f64]) {
        for (j, xj) in x.iter_mut().enumerate() {
            *xj = self.col(j).iter().zip(y).map(|(a, b)| a * b).sum();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerIteration {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub const POWER_REL_TOL: f64 = 1e-6;
pub const POWER_MAX_ITERS: usize = 500;

/// Estimate `||A||_2` by power iteration on `A^T A` from a seeded Gaussian start.
///
/// Stops when successive estimates agree to `rel_tol` or after `max_iters`
/// products with `A^T A`. The estimate never exceeds the true norm.
pub fn power_iteration_norm(
    op: &dyn LinearOperator,
    rel_tol: f64,
    max_iters: usize,
    seed: u64,
) -> PowerIteration {
    let (m, n) = (op.nrows(), op.ncols());
    if m == 0 || n == 0 {
        return PowerIteration {
            value: 0.0,
            iterations: 0,
            converged: true,
        };
    }
    let mut rng = seeded(seed);
    let mut x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut y = vec![0.0; m];
    let mut estimate = 0.0;
    for it in 1..=max_iters {
        let nx = l2(&x);
        if nx == 0.0 {
            return PowerIteration {
                value: 0.0,
                iterations: it,
                converged: true,
            };
        }
        x.iter_mut().for_each(|v| *v /= nx);
        op.apply(&x, &mut y);
        let next = l2(&y);
        op.apply_transpose(&y, &mut x);
        if (next - estimate).abs() <= rel_tol * next {
            return PowerIteration {
                value: next,
                iterations: it,
                converged: true,
            };
        }
        estimate = next;
    }
    PowerIteration {
        value: estimate,
        iterations: max_iters,
        converged: false,
    }
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Triangular factor of a tall matrix, `A = Q R` with `R` of size `n x n`.
pub fn r_factor(a: MatRef<'_, f64>) -> Mat<f64> {
    a.qr().thin_R().to_owned()
}

/// `||A||_2`: exact when `min(m, n) <= EXACT_SVD_LIMIT`, power iteration otherwise.
pub fn spectral_norm(a: MatRef<'_, f64>) -> Result<f64> {
    let (m, n) = (a.nrows(), a.ncols());
    if m == 0 || n == 0 {
        return Ok(0.0);
    }
    if m.min(n) > EXACT_SVD_LIMIT {
        return Ok(power_iteration_norm(&a, POWER_REL_TOL, POWER_MAX_ITERS, 0).value);
    }
    let s = if m > 4 * n {
        singular_values(r_factor(a).as_ref())?
    } else if n > 4 * m {
        singular_values(r_factor(a.transpose()).as_ref())?
    } else {
        singular_values(a)?
    };
    Ok(s[0])
}
