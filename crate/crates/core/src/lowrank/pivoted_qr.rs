//! Column-pivoted Householder QR with norm downdating.

use faer::{Mat, MatRef};

/// `A P = Q R` with `Q` (`m x k`) orthonormal, `R` (`k x n`) upper
/// trapezoidal and `k = min(m, n)`. `permutation[i]` is the original index
/// of the column moved to position `i`.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    pub q: Mat<f64>,
    pub r: Mat<f64>,
    pub permutation: Vec<usize>,
}

/// Householder vectors stored below the diagonal of the working matrix.
pub(crate) struct Factored {
    pub a: Mat<f64>,
    pub tau: Vec<f64>,
    pub permutation: Vec<usize>,
    pub steps: usize,
}

impl Factored {
    /// Rows `0..steps` of R (upper trapezoidal, `steps x n`).
    pub fn r_top(&self) -> Mat<f64> {
        let n = self.a.ncols();
        Mat::from_fn(
            self.steps,
            n,
            |i, j| if j >= i { self.a[(i, j)] } else { 0.0 },
        )
    }

    fn form_q(&self) -> Mat<f64> {
        let m = self.a.nrows();
        let k = self.steps;
        let mut q = Mat::<f64>::identity(m, k);
        for i in (0..k).rev() {
            let tau = self.tau[i];
            if tau == 0.0 {
                continue;
            }
            let v = &self.a.col_as_slice(i)[i + 1..];
            for j in i..k {
                let col = &mut q.col_as_slice_mut(j)[i..];
                let (head, tail) = col.split_first_mut().expect("nonempty column");
                let w = *head + dot(v, tail);
                *head -= tau * w;
                axpy(-tau * w, v, tail);
            }
        }
        q
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn norm(x: &[f64]) -> f64 {
    // Scaled to avoid overflow on huge entries.
    let scale = x.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale
        * x.iter()
            .map(|v| (v / scale) * (v / scale))
            .sum::<f64>()
            .sqrt()
}

/// Greedy max-residual-norm pivoting, stopped after `max_steps` reflections.
///
/// Downdated column norms are recomputed from scratch once the downdate has
/// cancelled more than half the significant digits.
pub(crate) fn factor(mut a: Mat<f64>, max_steps: usize) -> Factored {
    let (m, n) = (a.nrows(), a.ncols());
    let steps = max_steps.min(m).min(n);
    let tol = f64::EPSILON.sqrt();

    let mut permutation: Vec<usize> = (0..n).collect();
    let mut vn1: Vec<f64> = (0..n).map(|j| norm(a.col_as_slice(j))).collect();
    let mut vn2 = vn1.clone();
    let mut tau = vec![0.0; steps];
    let mut v = Vec::with_capacity(m);

    for i in 0..steps {
        // First column attaining the largest residual norm.
        let mut pvt = i;
        for j in i + 1..n {
            if vn1[j] > vn1[pvt] {
                pvt = j;
            }
        }
        if pvt != i {
            swap_columns(&mut a, i, pvt);
            permutation.swap(i, pvt);
            vn1[pvt] = vn1[i];
            vn2[pvt] = vn2[i];
        }

        // Reflector zeroing a[i+1.., i]; a[i, i] becomes beta.
        {
            let col = &mut a.col_as_slice_mut(i)[i..];
            let (alpha, x) = col.split_first_mut().expect("nonempty column");
            let xnorm = norm(x);
            if xnorm == 0.0 {
                tau[i] = 0.0;
            } else {
                let beta = -alpha.signum() * alpha.hypot(xnorm);
                tau[i] = (beta - *alpha) / beta;
                let scale = 1.0 / (*alpha - beta);
                for xi in x.iter_mut() {
                    *xi *= scale;
                }
                *alpha = beta;
            }
        }
        v.clear();
        v.extend_from_slice(&a.col_as_slice(i)[i + 1..]);

        let t = tau[i];
        for j in i + 1..n {
            let col = &mut a.col_as_slice_mut(j)[i..];
            if t != 0.0 {
                let (head, tail) = col.split_first_mut().expect("nonempty column");
                let w = *head + dot(&v, tail);
                *head -= t * w;
                axpy(-t * w, &v, tail);
            }
            if vn1[j] != 0.0 {
                let ratio = col[0].abs() / vn1[j];
                let temp = (1.0 - ratio * ratio).max(0.0);
                let temp2 = temp * (vn1[j] / vn2[j]).powi(2);
                if temp2 <= tol {
                    vn1[j] = norm(&col[1..]);
                    vn2[j] = vn1[j];
                } else {
                    vn1[j] *= temp.sqrt();
                }
            }
        }
    }
    Factored {
        a,
        tau,
        permutation,
        steps,
    }
}

fn swap_columns(a: &mut Mat<f64>, i: usize, j: usize) {
    let m = a.nrows();
    for r in 0..m {
        let t = a[(r, i)];
        a[(r, i)] = a[(r, j)];
        a[(r, j)] = t;
    }
}

/// Full column-pivoted QR.
pub fn pivoted_qr(a: MatRef<'_, f64>) -> PivotedQr {
    let k = a.nrows().min(a.ncols());
    let f = factor(a.to_owned(), k);
    PivotedQr {
        q: f.form_q(),
        r: f.r_top(),
        permutation: f.permutation.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(m: usize, n: usize, seed: u64) -> Mat<f64> {
        let mut rng = seeded(seed);
        Mat::from_fn(m, n, |_, _| StandardNormal.sample(&mut rng))
    }

    fn permuted(a: &Mat<f64>, perm: &[usize]) -> Mat<f64> {
        Mat::from_fn(a.nrows(), perm.len(), |i, j| a[(i, perm[j])])
    }

    #[test]
    fn reconstruction_residual() {
        let a = gaussian(30, 20, 4);
        let f = pivoted_qr(a.as_ref());
        let res = (&f.q * &f.r - permuted(&a, &f.permutation)).norm_l2();
        assert!(res / a.norm_l2() < 1e-12, "{res}");
        let qtq = f.q.transpose() * &f.q;
        assert!((&qtq - Mat::<f64>::identity(20, 20)).norm_l2() < 1e-12);
    }

    #[test]
    fn wide_matrix() {
        let a = gaussian(5, 12, 6);
        let f = pivoted_qr(a.as_ref());
        assert_eq!((f.q.nrows(), f.q.ncols()), (5, 5));
        assert_eq!((f.r.nrows(), f.r.ncols()), (5, 12));
        let res = (&f.q * &f.r - permuted(&a, &f.permutation)).norm_l2();
        assert!(res / a.norm_l2() < 1e-12);
    }

    #[test]
    fn pivots_are_monotone() {
        for seed in 0..10 {
            let mut a = gaussian(40, 15, seed);
            // Graded columns so pivoting actually reorders.
            for j in 0..15 {
                let s = 10f64.powi(-((j * 7 % 15) as i32) / 2);
                for x in a.col_as_slice_mut(j) {
                    *x *= s;
                }
            }
            let f = pivoted_qr(a.as_ref());
            for i in 1..15 {
                assert!(f.r[(i - 1, i - 1)].abs() >= f.r[(i, i)].abs() * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn orthogonal_input_has_unit_pivots() {
        let q = gaussian(10, 6, 2).qr().compute_thin_Q();
        let f = pivoted_qr(q.as_ref());
        for i in 0..6 {
            assert!((f.r[(i, i)].abs() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn duplicate_column_detected() {
        let g = gaussian(8, 2, 3);
        let a = Mat::from_fn(8, 3, |i, j| g[(i, if j == 2 { 1 } else { 0 })]);
        let f = pivoted_qr(a.as_ref());
        assert!(f.r[(2, 2)].abs() < 1e-12, "{}", f.r[(2, 2)]);
    }

    #[test]
    fn downdating_survives_cancellation() {
        // Columns nearly parallel to the first pivot force norm recomputation.
        let g = gaussian(50, 10, 12);
        let a = Mat::from_fn(50, 10, |i, j| g[(i, 0)] + 1e-9 * g[(i, j)]);
        let f = pivoted_qr(a.as_ref());
        let res = (&f.q * &f.r - permuted(&a, &f.permutation)).norm_l2();
        assert!(res / a.norm_l2() < 1e-12);
        for i in 1..10 {
            assert!(f.r[(i - 1, i - 1)].abs() >= f.r[(i, i)].abs() * (1.0 - 1e-6));
        }
    }
}
