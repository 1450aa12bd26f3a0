//! Empirical checks of the sampling and projection bounds on synthetic matrices.
//!
//! Matrices here are `p x q` and are sampled by rows, so the projector of a
//! sample is onto the span of the chosen rows acting from the right. This is
//! the transpose of the column-sampling statement and leaves every norm
//! unchanged.

use faer::{Mat, MatRef};
use rand::seq::index;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::lowrank::{leverage_scores, singular_values, svd};
use crate::rng::{derive_seed, seeded};
use crate::sampling::{reconstruction_bound, sample_complexity};

/// Relative slack allowed on deterministic inequalities.
pub const BOUND_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundTrialResult {
    pub trial_seed: u64,
    pub observed: f64,
    pub bound: f64,
    pub satisfied: bool,
    /// `observed / bound`; infinite when the bound is zero and `observed` is not.
    pub slack_ratio: f64,
    /// The hypotheses of the bound failed, so nothing was checked.
    pub skipped: bool,
}

impl BoundTrialResult {
    /// `observed <= bound (1 + 1e-8) + 1e-8 scale`, with `scale` the norm of
    /// the matrix so that exact-rank cases with a zero bound pass on rounding.
    fn check(trial_seed: u64, observed: f64, bound: f64, scale: f64) -> Self {
        let slack_ratio = if bound > 0.0 {
            observed / bound
        } else if observed == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        Self {
            trial_seed,
            observed,
            bound,
            satisfied: observed <= bound * (1.0 + BOUND_SLACK) + BOUND_SLACK * scale,
            slack_ratio,
            skipped: false,
        }
    }

    fn skipped(trial_seed: u64) -> Self {
        Self {
            trial_seed,
            observed: f64::NAN,
            bound: f64::NAN,
            satisfied: true,
            slack_ratio: f64::NAN,
            skipped: true,
        }
    }
}

pub(crate) fn orthonormal_gaussian(rows: usize, cols: usize, seed: u64) -> Mat<f64> {
    let mut rng = seeded(seed);
    let g = Mat::<f64>::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng));
    g.qr().compute_thin_Q()
}

/// `p x r` orthonormal basis with every row of squared norm exactly `r / p`
/// (for `r < p`), up to rounding.
///
/// Built from a discrete Fourier basis (a constant column when `r` is odd,
/// then cosine/sine pairs at frequencies `1, 2, ...`), rotated by a random
/// `r x r` orthogonal matrix and with random row signs.
pub fn flat_leverage_basis(p: usize, r: usize, seed: u64) -> Result<Mat<f64>> {
    if r == 0 || r > p {
        return Err(Error::invalid(format!(
            "need 1 <= r <= p, got r={r}, p={p}"
        )));
    }
    if r == p {
        return Ok(orthonormal_gaussian(p, p, seed));
    }
    // Frequencies up to r/2 < p/2 keep the columns orthogonal.
    let pf = p as f64;
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(r);
    if r % 2 == 1 {
        cols.push(vec![1.0 / pf.sqrt(); p]);
    }
    let mut freq = 1;
    while cols.len() < r {
        let w = 2.0 * std::f64::consts::PI * freq as f64 / pf;
        let scale = (2.0 / pf).sqrt();
        cols.push((0..p).map(|i| scale * (w * i as f64).cos()).collect());
        cols.push((0..p).map(|i| scale * (w * i as f64).sin()).collect());
        freq += 1;
    }
    let base = Mat::from_fn(p, r, |i, j| cols[j][i]);
    let rot = orthonormal_gaussian(r, r, derive_seed(seed, &[0]));
    let mut rng = seeded(derive_seed(seed, &[1]));
    let signs: Vec<f64> = (0..p)
        .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
        .collect();
    let mut u = base * rot;
    for j in 0..r {
        for (i, x) in u.col_as_slice_mut(j).iter_mut().enumerate() {
            *x *= signs[i];
        }
    }
    Ok(u)
}

/// Complete an orthonormal `p x r` block to a `p x k` orthonormal matrix with
/// orthogonalized Gaussian columns.
fn complete_basis(head: &Mat<f64>, k: usize, seed: u64) -> Mat<f64> {
    let (p, r) = (head.nrows(), head.ncols());
    let mut rng = seeded(seed);
    let g = Mat::from_fn(p, k, |i, j| {
        if j < r {
            head[(i, j)]
        } else {
            StandardNormal.sample(&mut rng)
        }
    });
    let mut q = g.qr().compute_thin_Q();
    // Householder QR may flip signs of the leading block; restore them.
    for j in 0..r {
        let d: f64 = (0..p).map(|i| q[(i, j)] * head[(i, j)]).sum();
        if d < 0.0 {
            for x in q.col_as_slice_mut(j) {
                *x = -*x;
            }
        }
    }
    q
}

/// `A = U diag(sigma) V^T` (`p x q`) with `sigma_i = decay^(i-1)` for
/// `i <= r` and `tail * decay^r` beyond, and with row leverage exactly
/// `r / p` for the leading `r` directions.
pub fn make_low_coherence_matrix_with_tail(
    p: usize,
    q: usize,
    r: usize,
    decay: f64,
    tail: f64,
    seed: u64,
) -> Result<Mat<f64>> {
    let k = p.min(q);
    if r == 0 || r > k {
        return Err(Error::invalid(format!(
            "need 1 <= r <= min(p, q) = {k}, got {r}"
        )));
    }
    if !(decay > 0.0 && decay.is_finite() && tail >= 0.0) {
        return Err(Error::invalid(
            "decay must be positive and tail nonnegative",
        ));
    }
    let head = flat_leverage_basis(p, r, derive_seed(seed, &[0]))?;
    let u = complete_basis(&head, k, derive_seed(seed, &[1]));
    let v = orthonormal_gaussian(q, k, derive_seed(seed, &[2]));
    let sigma: Vec<f64> = (0..k)
        .map(|i| {
            if i < r {
                decay.powi(i as i32)
            } else {
                tail * decay.powi(r as i32)
            }
        })
        .collect();
    let us = Mat::from_fn(p, k, |i, j| u[(i, j)] * sigma[j]);
    Ok(us * v.transpose())
}

/// Low-coherence fixture with tail `1e-8 decay^r`.
pub fn make_low_coherence_matrix(
    p: usize,
    q: usize,
    r: usize,
    decay: f64,
    seed: u64,
) -> Result<Mat<f64>> {
    make_low_coherence_matrix_with_tail(p, q, r, decay, 1e-8, seed)
}

/// Orthonormal basis of the row space of `b` (as columns), dropping
/// directions below `max(dims) * eps * sigma_1`.
fn row_space(b: MatRef<'_, f64>) -> Result<Mat<f64>> {
    let f = svd(b)?;
    let Some(&s0) = f.singular_values.first() else {
        return Ok(Mat::zeros(b.ncols(), 0));
    };
    let tol = b.nrows().max(b.ncols()) as f64 * f64::EPSILON * s0;
    let k = f.singular_values.iter().take_while(|&&s| s > tol).count();
    Ok(f.v.as_ref().subcols(0, k).to_owned())
}

/// `||A (I - W W^T)||_2` for orthonormal `W`.
fn residual_norm(a: MatRef<'_, f64>, w: &Mat<f64>) -> Result<f64> {
    let proj = if w.ncols() == 0 {
        Mat::zeros(a.nrows(), a.ncols())
    } else {
        (a * w) * w.transpose()
    };
    let diff = a - proj;
    Ok(singular_values(diff.as_ref())?
        .first()
        .copied()
        .unwrap_or(0.0))
}

fn spectral(a: MatRef<'_, f64>) -> Result<f64> {
    Ok(singular_values(a)?.first().copied().unwrap_or(0.0))
}

fn pseudo_inverse_full_row_rank(a: MatRef<'_, f64>) -> Result<Option<Mat<f64>>> {
    let f = svd(a)?;
    let s = &f.singular_values;
    if s.len() < a.nrows() || !(s[s.len() - 1] > 1e-10 * s[0]) {
        return Ok(None);
    }
    let ut = f.u.transpose();
    let vs = Mat::from_fn(f.v.nrows(), s.len(), |i, j| f.v[(i, j)] / s[j]);
    Ok(Some(vs * ut))
}

/// Deterministic projection bound for `Y = A Omega` (`Omega` is `q x s`):
/// `||(I - P_Y) A||^2 <= ||S2||^2 + ||S2 Omega2 Omega1^+||^2`, where
/// `Omega1 = V_r^T Omega` and `Omega2` the remaining right singular
/// coordinates. Skipped when `Omega1` lacks full row rank.
pub fn verify_deterministic_bound(
    a: MatRef<'_, f64>,
    omega: MatRef<'_, f64>,
    r: usize,
    trial_seed: u64,
) -> Result<BoundTrialResult> {
    if omega.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.ncols(),
            found: omega.nrows(),
        });
    }
    let f = svd(a)?;
    let k = f.singular_values.len();
    if r == 0 || r > k {
        return Err(Error::invalid(format!("need 1 <= r <= {k}, got {r}")));
    }
    let omega1 = f.v.as_ref().subcols(0, r).transpose() * omega;
    let Some(pinv) = pseudo_inverse_full_row_rank(omega1.as_ref())? else {
        return Ok(BoundTrialResult::skipped(trial_seed));
    };
    let s2 = &f.singular_values[r..];
    let tail_norm = s2.first().copied().unwrap_or(0.0);
    let bound_sq = if s2.is_empty() {
        0.0
    } else {
        let v2 = f.v.as_ref().subcols(r, k - r);
        let omega2 = v2.transpose() * omega;
        let mut m = omega2 * pinv;
        for (i, s) in s2.iter().enumerate() {
            for j in 0..m.ncols() {
                m[(i, j)] *= s;
            }
        }
        tail_norm * tail_norm + spectral(m.as_ref())?.powi(2)
    };
    // Projector onto range(A Omega), acting from the left.
    let y = a * omega;
    let basis = row_space(y.transpose())?;
    let observed = residual_norm(a.transpose(), &basis)?;
    Ok(BoundTrialResult::check(
        trial_seed,
        observed,
        bound_sq.sqrt(),
        f.singular_values[0],
    ))
    .map(|mut t| {
        t.observed = observed * observed;
        t.bound = bound_sq;
        t.slack_ratio = if bound_sq > 0.0 {
            t.observed / bound_sq
        } else {
            t.slack_ratio
        };
        t
    })
}

/// With `P` the projector onto the span of the sampled rows and `A~` the best
/// rank-`r` approximation of `A P`: `||A - A~|| <= sigma_{r+1}(A) + ||A (I - P)||`.
pub fn verify_projection_lemma(
    a: MatRef<'_, f64>,
    rows: &[usize],
    r: usize,
    trial_seed: u64,
) -> Result<BoundTrialResult> {
    if rows.is_empty() {
        return Err(Error::EmptySample);
    }
    if let Some(&bad) = rows.iter().find(|&&i| i >= a.nrows()) {
        return Err(Error::OutOfRange {
            index: bad,
            len: a.nrows(),
        });
    }
    let sub = Mat::from_fn(rows.len(), a.ncols(), |i, j| a[(rows[i], j)]);
    let w = row_space(sub.as_ref())?;
    let projected = if w.ncols() == 0 {
        Mat::zeros(a.nrows(), a.ncols())
    } else {
        (a * &w) * w.transpose()
    };
    let approx = svd(projected.as_ref())?.truncated(r);
    let observed = spectral((a - approx).as_ref())?;
    let s = singular_values(a)?;
    let bound = s.get(r).copied().unwrap_or(0.0) + residual_norm(a, &w)?;
    Ok(BoundTrialResult::check(trial_seed, observed, bound, s[0]))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformSamplingConfig {
    /// Rows (the sampled dimension).
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub eps: f64,
    pub delta: f64,
    pub trials: usize,
    pub seed: u64,
    pub decay: f64,
    /// Tail singular values are `tail * decay^r`.
    pub tail: f64,
    pub replacement: bool,
    /// Multiplies the bound; 1 except when self-testing the harness.
    pub bound_scale: f64,
}

impl UniformSamplingConfig {
    pub fn new(m: usize, n: usize, r: usize) -> Self {
        Self {
            m,
            n,
            r,
            eps: 0.5,
            delta: 0.1,
            trials: 200,
            seed: 0,
            decay: 0.5,
            tail: 1e-8,
            replacement: false,
            bound_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniformSamplingOutcome {
    pub s: usize,
    pub coherence: f64,
    /// `s > m`: the theorem says nothing.
    pub infeasible: bool,
    pub violations: usize,
    pub trials: Vec<BoundTrialResult>,
}

impl UniformSamplingOutcome {
    pub fn failure_rate(&self) -> f64 {
        if self.trials.is_empty() {
            0.0
        } else {
            self.violations as f64 / self.trials.len() as f64
        }
    }
}

/// Sample `s` rows uniformly, `s` from the sample-complexity formula with the
/// fixture's coherence, and compare `||A (I - P)||` with the reconstruction
/// bound. A fresh fixture is drawn per trial.
pub fn verify_uniform_sampling_theorem(
    cfg: &UniformSamplingConfig,
) -> Result<UniformSamplingOutcome> {
    if cfg.trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let probe =
        make_low_coherence_matrix_with_tail(cfg.m, cfg.n, cfg.r, cfg.decay, cfg.tail, cfg.seed)?;
    let gamma = leverage_scores(probe.transpose(), cfg.r)?
        .coherence()
        .max(cfg.r as f64 / cfg.m as f64);
    let s = sample_complexity(cfg.m, gamma, cfg.r, cfg.delta, cfg.eps)?;
    if s > cfg.m {
        return Ok(UniformSamplingOutcome {
            s,
            coherence: gamma,
            infeasible: true,
            violations: 0,
            trials: Vec::new(),
        });
    }
    let mut trials = Vec::with_capacity(cfg.trials);
    for t in 0..cfg.trials as u64 {
        let trial_seed = derive_seed(cfg.seed, &[t]);
        let a = make_low_coherence_matrix_with_tail(
            cfg.m, cfg.n, cfg.r, cfg.decay, cfg.tail, trial_seed,
        )?;
        let mut rng = seeded(derive_seed(trial_seed, &[1]));
        let rows: Vec<usize> = if cfg.replacement {
            (0..s).map(|_| rng.random_range(0..cfg.m)).collect()
        } else {
            index::sample(&mut rng, cfg.m, s).into_vec()
        };
        let sub = Mat::from_fn(rows.len(), cfg.n, |i, j| a[(rows[i], j)]);
        let w = row_space(sub.as_ref())?;
        let observed = residual_norm(a.as_ref(), &w)?;
        let sigma = singular_values(a.as_ref())?;
        let sigma_r1 = sigma.get(cfg.r).copied().unwrap_or(0.0);
        let bound = cfg.bound_scale * reconstruction_bound(cfg.m, s, cfg.eps, sigma_r1);
        trials.push(BoundTrialResult::check(
            trial_seed, observed, bound, sigma[0],
        ));
    }
    let violations = trials.iter().filter(|t| !t.satisfied).count();
    Ok(UniformSamplingOutcome {
        s,
        coherence: gamma,
        infeasible: false,
        violations,
        trials,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChernoffOutcome {
    pub eps: f64,
    pub empirical_lower: f64,
    pub empirical_upper: f64,
    pub bound_lower: f64,
    pub bound_upper: f64,
    /// Monte Carlo standard errors `sqrt(p (1-p) / trials)` with `p` the bound clamped to 1.
    pub se_lower: f64,
    pub se_upper: f64,
}

impl ChernoffOutcome {
    /// Empirical tails within the bound plus three standard errors.
    pub fn holds(&self) -> bool {
        self.empirical_lower <= self.bound_lower + 3.0 * self.se_lower
            && self.empirical_upper <= self.bound_upper + 3.0 * self.se_upper
    }
}

/// `r [e^-eps / (1-eps)^(1-eps)]^(1/L)`.
pub fn chernoff_lower_bound(r: usize, eps: f64, l: f64) -> f64 {
    r as f64 * ((-eps).exp() / (1.0 - eps).powf(1.0 - eps)).powf(1.0 / l)
}

/// `r [e^eps / (1+eps)^(1+eps)]^(1/L)`.
pub fn chernoff_upper_bound(r: usize, eps: f64, l: f64) -> f64 {
    r as f64 * (eps.exp() / (1.0 + eps).powf(1.0 + eps)).powf(1.0 / l)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChernoffConfig {
    pub r: usize,
    pub m: usize,
    pub s: usize,
    pub eps: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    /// Draw the `s` indices without replacement instead of independently.
    pub without_replacement: bool,
}

/// Extreme eigenvalues of `Y = (m/s) sum_k V^T e_jk e_jk^T V` for uniform
/// `j_k`, with `V` an `m x r` orthonormal basis of coherence `gamma`.
/// `E[Y] = I` and `L = (m/s) gamma`.
pub fn verify_chernoff_tails(cfg: &ChernoffConfig) -> Result<Vec<ChernoffOutcome>> {
    let (r, m, s) = (cfg.r, cfg.m, cfg.s);
    if r == 0 || r > m || s == 0 || cfg.trials == 0 {
        return Err(Error::invalid("need 1 <= r <= m, s >= 1 and trials >= 1"));
    }
    if cfg.without_replacement && s > m {
        return Err(Error::invalid(
            "cannot draw more than m indices without replacement",
        ));
    }
    if cfg.eps.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
        return Err(Error::invalid("Chernoff eps values must lie in (0, 1]"));
    }
    let v = orthonormal_gaussian(m, r, cfg.seed);
    let gamma = (0..m)
        .map(|i| (0..r).map(|k| v[(i, k)] * v[(i, k)]).sum::<f64>())
        .fold(0.0, f64::max);
    let l = m as f64 / s as f64 * gamma;
    let scale = m as f64 / s as f64;

    let mut extremes = Vec::with_capacity(cfg.trials);
    for t in 0..cfg.trials as u64 {
        let mut rng = seeded(derive_seed(cfg.seed, &[t]));
        let draws: Vec<usize> = if cfg.without_replacement {
            index::sample(&mut rng, m, s).into_vec()
        } else {
            (0..s).map(|_| rng.random_range(0..m)).collect()
        };
        let mut y = Mat::<f64>::zeros(r, r);
        for &j in &draws {
            for a in 0..r {
                for b in 0..r {
                    y[(a, b)] += scale * v[(j, a)] * v[(j, b)];
                }
            }
        }
        let ev = y
            .self_adjoint_eigenvalues(faer::Side::Lower)
            .map_err(|e| Error::Numerical(format!("eigenvalues did not converge: {e:?}")))?;
        let lo = ev.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        extremes.push((lo, hi));
    }

    let n = cfg.trials as f64;
    Ok(cfg
        .eps
        .iter()
        .map(|&eps| {
            // A hair of tolerance so that Y = I exactly does not register as a tail event.
            let tol = 1e-12;
            let lower = extremes
                .iter()
                .filter(|(lo, _)| *lo <= 1.0 - eps - tol)
                .count() as f64
                / n;
            let upper = extremes
                .iter()
                .filter(|(_, hi)| *hi >= 1.0 + eps + tol)
                .count() as f64
                / n;
            let bl = chernoff_lower_bound(r, eps, l);
            let bu = chernoff_upper_bound(r, eps, l);
            let se = |b: f64| {
                let p = b.min(1.0);
                (p * (1.0 - p) / n).sqrt()
            };
            ChernoffOutcome {
                eps,
                empirical_lower: lower,
                empirical_upper: upper,
                bound_lower: bl,
                bound_upper: bu,
                se_lower: se(bl),
                se_upper: se(bu),
            }
        })
        .collect())
}

/// `sqrt(1 + 6 x) <= 1 + 2 x` for `x = m/s >= 1`.
pub fn improvement_holds(ratio: f64) -> bool {
    (1.0 + 6.0 * ratio).sqrt() <= 1.0 + 2.0 * ratio
}
