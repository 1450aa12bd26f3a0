//! Compression of an interaction matrix from a row subsample.
//!
//! For a tall `K = Q R` every quantity of the form `||K M||_2` equals
//! `||R M||_2`, and the column-pivoted QR of `K` and of `R` select the same
//! pivots and projection. The [`Compressor`] therefore factors `K` once and
//! measures reconstruction errors on the `n x n` factor. Subsamples with more
//! than `2n` rows are reduced the same way before their ID is computed.

use std::time::{Duration, Instant};

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::datagen::PointSet;
use crate::error::{Error, Result};
use crate::geometry::order_by_distance;
use crate::kernel::{eval_kernel, kernel_matrix, KernelSpec};
use crate::lowrank::norms::{r_factor, EXACT_SVD_LIMIT, POWER_MAX_ITERS, POWER_REL_TOL};
use crate::lowrank::{
    bound_id, epsilon_rank, interpolative_decomposition, power_iteration_norm, singular_values,
    spectral_norm, svd, IdFactorization, LinearOperator,
};
use crate::rng::{derive_seed, seeded};
use crate::sampling::{reconstruction_bound, RowSample, SamplingScheme};
use rand::Rng as _;

/// Default cap on `m * n` for exact spectral norms of the full matrix.
pub const DEFAULT_MEMORY_BUDGET: usize = 200_000_000;

/// The `eps` plugged into the sampling bound reported alongside each run.
pub const REPORT_BOUND_EPS: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Id,
    Svd,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Id => "id",
            Method::Svd => "svd",
        }
    }
}

/// How the rank of a compression is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RankRule {
    /// Smallest `r` with `sigma_{r+1}(K_s) / sigma_ref < eps`; `sigma_ref` is
    /// `sigma_1(K_s)` unless `reference` is given.
    Eps { eps: f64, reference: Option<f64> },
    /// A fixed rank, clamped to `min(m_s, n)`.
    Fixed(usize),
}

impl RankRule {
    pub fn eps(eps: f64) -> Self {
        RankRule::Eps {
            eps,
            reference: None,
        }
    }

    fn rank(&self, sample_sigma: &[f64]) -> usize {
        match *self {
            RankRule::Eps { eps, reference } => epsilon_rank(sample_sigma, eps, reference),
            RankRule::Fixed(r) => r.min(sample_sigma.len()),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Timings {
    pub factor: Duration,
    pub error: Duration,
}

impl Timings {
    pub fn total(&self) -> Duration {
        self.factor + self.error
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompressionReport {
    pub method: Method,
    pub scheme: Option<SamplingScheme>,
    pub fraction: f64,
    pub sample_rows: usize,
    pub rank: usize,
    /// Every singular value of the subsample fell below the tolerance; the
    /// reconstruction is the zero matrix and `rel_error` is 1.
    pub rank_zero: bool,
    /// `||K - K_hat||_2 / ||K||_2`.
    pub rel_error: f64,
    pub mc_error: Option<f64>,
    /// `sqrt(1 + n r (n - r)) sigma_{r+1}(K_s) / ||K||_2`.
    pub bound_id: f64,
    /// Sampling bound `sqrt(1 + (m/m_s)(1+eps)/(1-eps)^2) sigma_{r+1}(K) / ||K||_2`
    /// at `eps = 0.5`, when the spectrum of `K` is known.
    pub bound_sampling: Option<f64>,
    pub sigma_r1_sample: f64,
    pub sigma_r1_full: Option<f64>,
    /// `sigma_{r+1}(K_s) <= sigma_{r+1}(K)`; checked only for duplicate-free
    /// samples of a matrix whose spectrum is known.
    pub domination_holds: Option<bool>,
    pub seed: u64,
    pub timings: Timings,
}

/// Cached factorization of one interaction matrix.
pub struct Compressor<'a> {
    k: MatRef<'a, f64>,
    /// `R` from `K = Q R` for tall `K`, `K` itself otherwise. `None` on the
    /// power-iteration path.
    basis: Option<Mat<f64>>,
    sigma: Option<Vec<f64>>,
    norm: f64,
}

impl<'a> Compressor<'a> {
    pub fn new(k: MatRef<'a, f64>) -> Result<Self> {
        Self::with_budget(k, DEFAULT_MEMORY_BUDGET)
    }

    /// Above `budget` entries (or when both dimensions exceed the exact-SVD
    /// limit) norms come from power iteration and `sigma(K)` is unavailable.
    pub fn with_budget(k: MatRef<'a, f64>, budget: usize) -> Result<Self> {
        let (m, n) = (k.nrows(), k.ncols());
        if m == 0 || n == 0 {
            return Err(Error::invalid("interaction matrix is empty"));
        }
        if m.saturating_mul(n) > budget || m.min(n) > EXACT_SVD_LIMIT {
            let norm = power_iteration_norm(&k, POWER_REL_TOL, POWER_MAX_ITERS, 0).value;
            return Ok(Self {
                k,
                basis: None,
                sigma: None,
                norm,
            });
        }
        let basis = reduce(k);
        let sigma = singular_values(basis.as_ref())?;
        Ok(Self {
            k,
            norm: sigma[0],
            basis: Some(basis),
            sigma: Some(sigma),
        })
    }

    pub fn matrix(&self) -> MatRef<'a, f64> {
        self.k
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Singular values of `K`, when computed exactly.
    pub fn singular_values(&self) -> Option<&[f64]> {
        self.sigma.as_deref()
    }

    fn sigma_at(&self, i: usize) -> Option<f64> {
        self.sigma
            .as_ref()
            .map(|s| s.get(i).copied().unwrap_or(0.0))
    }

    /// Reduced subsample: same right singular structure and ID as `K[rows, :]`.
    fn sample_basis(&self, sample: &RowSample) -> Result<Mat<f64>> {
        if sample.is_empty() {
            return Err(Error::EmptySample);
        }
        let m = self.k.nrows();
        if let Some(&bad) = sample.indices.iter().find(|&&i| i >= m) {
            return Err(Error::OutOfRange { index: bad, len: m });
        }
        if let Some(b) = &self.basis {
            if sample.is_all_rows(m) {
                return Ok(b.clone());
            }
        }
        let rows = gather_rows(self.k, &sample.indices);
        Ok(reduce(rows.as_ref()))
    }

    /// `||K - C||_2` where `C = reconstruct(K-like)` is linear in the rows.
    fn error_norm(&self, reconstruct: impl Fn(MatRef<'_, f64>) -> Mat<f64>) -> f64 {
        match &self.basis {
            Some(b) => {
                let diff = b - reconstruct(b.as_ref());
                spectral_norm(diff.as_ref()).unwrap_or(f64::NAN)
            }
            None => {
                let op = Difference {
                    k: self.k,
                    approx: reconstruct(self.k),
                };
                power_iteration_norm(&op, POWER_REL_TOL, POWER_MAX_ITERS, 0).value
            }
        }
    }

    fn report(
        &self,
        method: Method,
        sample: &RowSample,
        rank: usize,
        sample_sigma: &[f64],
    ) -> CompressionReport {
        let n = self.k.ncols();
        let sigma_r1_sample = sample_sigma.get(rank).copied().unwrap_or(0.0);
        let sigma_r1_full = self.sigma_at(rank);
        let domination_holds = match (&self.sigma, sample.has_duplicates()) {
            (Some(s), false) => Some(
                sample_sigma
                    .iter()
                    .zip(s.iter())
                    .all(|(a, b)| *a <= b * (1.0 + 1e-10) + 1e-13 * s[0]),
            ),
            _ => None,
        };
        let m = self.k.nrows();
        CompressionReport {
            method,
            scheme: None,
            fraction: sample.fraction,
            sample_rows: sample.len(),
            rank,
            rank_zero: rank == 0,
            rel_error: 1.0,
            mc_error: None,
            bound_id: bound_id(n, rank, sigma_r1_sample) / self.norm,
            bound_sampling: sigma_r1_full
                .map(|s| reconstruction_bound(m, sample.len(), REPORT_BOUND_EPS, s) / self.norm),
            sigma_r1_sample,
            sigma_r1_full,
            domination_holds,
            seed: sample.seed,
            timings: Timings::default(),
        }
    }

    /// ID of the sampled rows, evaluated on every row of `K`.
    pub fn compress_id(
        &self,
        sample: &RowSample,
        rule: RankRule,
    ) -> Result<(IdFactorization, CompressionReport)> {
        let t0 = Instant::now();
        let b = self.sample_basis(sample)?;
        let sample_sigma = singular_values(b.as_ref())?;
        let r = rule.rank(&sample_sigma);
        let id = if r == 0 {
            IdFactorization::zero_rank(self.k.ncols())
        } else {
            interpolative_decomposition(b.as_ref(), r)?
        };
        let factor = t0.elapsed();

        let t1 = Instant::now();
        let mut report = self.report(Method::Id, sample, r, &sample_sigma);
        if r > 0 {
            report.rel_error = self.error_norm(|a| id.reconstruct(a)) / self.norm;
        }
        report.timings = Timings {
            factor,
            error: t1.elapsed(),
        };
        Ok((id, report))
    }

    /// Leading right singular vectors of the sampled rows; the error is that
    /// of `K V_r V_r^T`.
    pub fn compress_svd(
        &self,
        sample: &RowSample,
        rule: RankRule,
    ) -> Result<(Mat<f64>, CompressionReport)> {
        let t0 = Instant::now();
        let b = self.sample_basis(sample)?;
        let f = svd(b.as_ref())?;
        let r = rule.rank(&f.singular_values);
        let v = f.v.as_ref().subcols(0, r).to_owned();
        let factor = t0.elapsed();

        let t1 = Instant::now();
        let mut report = self.report(Method::Svd, sample, r, &f.singular_values);
        if r > 0 {
            let vt = v.transpose().to_owned();
            report.rel_error = self.error_norm(|a| (a * &v) * &vt) / self.norm;
        }
        report.timings = Timings {
            factor,
            error: t1.elapsed(),
        };
        Ok((v, report))
    }
}

/// `R` of a tall matrix, or a copy of a short one.
fn reduce(a: MatRef<'_, f64>) -> Mat<f64> {
    if a.nrows() > 2 * a.ncols() {
        r_factor(a)
    } else {
        a.to_owned()
    }
}

pub(crate) fn gather_rows(a: MatRef<'_, f64>, rows: &[usize]) -> Mat<f64> {
    Mat::from_fn(rows.len(), a.ncols(), |i, j| a[(rows[i], j)])
}

struct Difference<'a> {
    k: MatRef<'a, f64>,
    approx: Mat<f64>,
}

impl LinearOperator for Difference<'_> {
    fn nrows(&self) -> usize {
        self.k.nrows()
    }

    fn ncols(&self) -> usize {
        self.k.ncols()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let mut t = vec![0.0; y.len()];
        self.k.apply(x, y);
        self.approx.as_ref().apply(x, &mut t);
        y.iter_mut().zip(&t).for_each(|(a, b)| *a -= b);
    }

    fn apply_transpose(&self, y: &[f64], x: &mut [f64]) {
        let mut t = vec![0.0; x.len()];
        self.k.apply_transpose(y, x);
        self.approx.as_ref().apply_transpose(y, &mut t);
        x.iter_mut().zip(&t).for_each(|(a, b)| *a -= b);
    }
}

/// Monte Carlo estimates `||K_s - K_hat_s||_2 / ||K_s||_2` on Bernoulli(`s_mc`)
/// row subsets. `reconstruct_rows(rows)` returns those rows of `K_hat`.
///
/// Repetition `t` draws with seed `derive_seed(seed, [t])`; an empty draw is
/// retried once with `derive_seed(seed, [t, 1])`.
pub fn mc_error(
    k: MatRef<'_, f64>,
    reconstruct_rows: &dyn Fn(&[usize]) -> Mat<f64>,
    s_mc: f64,
    n_mc: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if !(s_mc > 0.0 && s_mc <= 1.0) {
        return Err(Error::invalid(format!(
            "s_mc must lie in (0, 1], got {s_mc}"
        )));
    }
    if n_mc == 0 {
        return Err(Error::invalid("n_mc must be at least 1"));
    }
    let m = k.nrows();
    let draw = |seed: u64| -> Vec<usize> {
        let mut rng = seeded(seed);
        (0..m).filter(|_| rng.random_bool(s_mc)).collect()
    };
    (0..n_mc as u64)
        .map(|t| {
            let mut rows = draw(derive_seed(seed, &[t]));
            if rows.is_empty() {
                rows = draw(derive_seed(seed, &[t, 1]));
            }
            if rows.is_empty() {
                return Err(Error::EmptySample);
            }
            let ks = gather_rows(k, &rows);
            let diff = &ks - reconstruct_rows(&rows);
            let num = spectral_norm(diff.as_ref())?;
            let den = spectral_norm(ks.as_ref())?;
            Ok(if num == 0.0 { 0.0 } else { num / den })
        })
        .collect()
}

/// Source densities.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargeVector {
    values: Vec<f64>,
    norm: f64,
}

impl ChargeVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("charges must be finite"));
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        Ok(Self { values, norm })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Far-field potentials through the skeleton: `q~ = P q`, then
/// `u_i = sum_j kernel(y_i, x~_j) q~_j`. Costs `O(n r + m r)`.
pub fn apply_skeleton(
    id: &IdFactorization,
    q: &ChargeVector,
    spec: &KernelSpec,
    targets: &PointSet,
    skeleton_points: &PointSet,
) -> Result<Vec<f64>> {
    if skeleton_points.len() != id.rank() {
        return Err(Error::DimensionMismatch {
            expected: id.rank(),
            found: skeleton_points.len(),
        });
    }
    if id.rank() == 0 {
        return Ok(vec![0.0; targets.len()]);
    }
    let qt = id.apply(q.values())?;
    targets
        .iter()
        .map(|y| {
            skeleton_points
                .iter()
                .zip(&qt)
                .map(|(x, w)| eval_kernel(spec, y, x).map(|k| k * w))
                .sum()
        })
        .collect()
}

/// Which form of the middle term of the full error bound to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundVariant {
    /// `sqrt(1 + (1+eps)(1-eps)^2 m/s)`, as printed.
    Printed,
    /// `sqrt(1 + (1+eps)(1-eps)^-2 m/s)`, consistent with the sampling bound.
    Corrected,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullErrorParams {
    pub m: usize,
    pub n: usize,
    pub s_count: usize,
    pub r: usize,
    pub eps: f64,
    pub sigma_r1_k: f64,
    pub sigma_r1_ks: f64,
    pub q_norm: f64,
}

/// `||q|| [ sigma_{r+1}(K) + sqrt(1 + c m/s) sigma_{r+1}(K) + sqrt(1 + n r (n-r)) sigma_{r+1}(K_s) ]`
/// with `c` set by `variant`.
pub fn bound_full_error(p: &FullErrorParams, variant: BoundVariant) -> f64 {
    let c = match variant {
        BoundVariant::Printed => (1.0 + p.eps) * (1.0 - p.eps).powi(2),
        BoundVariant::Corrected => (1.0 + p.eps) / (1.0 - p.eps).powi(2),
    };
    let ratio = p.m as f64 / p.s_count as f64;
    let sampling = (1.0 + c * ratio).sqrt() * p.sigma_r1_k;
    p.q_norm * (p.sigma_r1_k + sampling + bound_id(p.n, p.r, p.sigma_r1_ks))
}

/// Shares of `||K||_2` carried by the source block, the next `n` nearest
/// points, and everything else. `K` is all `N` points against the sources.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionFractions {
    pub self_frac: f64,
    pub nn_frac: f64,
    pub far_frac: f64,
}

pub fn interaction_fractions(
    ps: &PointSet,
    spec: &KernelSpec,
    center: &[f64],
    n: usize,
) -> Result<InteractionFractions> {
    if center.len() != ps.dim() {
        return Err(Error::DimensionMismatch {
            expected: ps.dim(),
            found: center.len(),
        });
    }
    if n == 0 || ps.len() < 2 * n {
        return Err(Error::invalid(format!(
            "interaction fractions need 1 <= n and N >= 2n, got n={n}, N={}",
            ps.len()
        )));
    }
    let (order, _) = order_by_distance(ps, center);
    let sources = ps.select(&order[..n])?;
    let block = |range: &[usize]| -> Result<Mat<f64>> {
        Ok(kernel_matrix(spec, &ps.select(range)?, &sources)?.into_inner())
    };
    let k_self = block(&order[..n])?;
    let k_nn = block(&order[n..2 * n])?;
    let far_r = if ps.len() > 2 * n {
        reduce(block(&order[2 * n..])?.as_ref())
    } else {
        Mat::zeros(0, n)
    };
    let stacked = Mat::from_fn(2 * n + far_r.nrows(), n, |i, j| {
        if i < n {
            k_self[(i, j)]
        } else if i < 2 * n {
            k_nn[(i - n, j)]
        } else {
            far_r[(i - 2 * n, j)]
        }
    });
    let total = spectral_norm(stacked.as_ref())?;
    if total == 0.0 {
        return Err(Error::Numerical(
            "interaction matrix is identically zero".into(),
        ));
    }
    Ok(InteractionFractions {
        self_frac: spectral_norm(k_self.as_ref())? / total,
        nn_frac: spectral_norm(k_nn.as_ref())? / total,
        far_frac: spectral_norm(far_r.as_ref())? / total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::gen_normal;
    use crate::geometry::split_sources_targets;
    use crate::sampling::{sample_rows, SamplingContext};
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(m: usize, n: usize, seed: u64) -> Mat<f64> {
        let mut rng = seeded(seed);
        Mat::from_fn(m, n, |_, _| StandardNormal.sample(&mut rng))
    }

    fn graded(m: usize, n: usize, decay: f64, seed: u64) -> Mat<f64> {
        let g = gaussian(m, n, seed);
        let h = gaussian(n, n, seed + 1);
        let d = Mat::from_fn(n, n, |i, j| if i == j { decay.powi(i as i32) } else { 0.0 });
        g * d * h
    }

    fn all_rows(m: usize) -> RowSample {
        RowSample {
            indices: (0..m).collect(),
            fraction: 1.0,
            seed: 0,
        }
    }

    fn direct_error(k: &Mat<f64>, approx: &Mat<f64>) -> f64 {
        singular_values((k - approx).as_ref()).unwrap()[0] / singular_values(k.as_ref()).unwrap()[0]
    }

    #[test]
    fn rank_one_is_exact() {
        let u = gaussian(300, 1, 1);
        let v = gaussian(1, 20, 2);
        let k = &u * &v;
        let c = Compressor::new(k.as_ref()).unwrap();
        let ctx = SamplingContext::new(300);
        let sample = sample_rows(
            &SamplingScheme::Uniform { replacement: false },
            &ctx,
            0.1,
            3,
        )
        .unwrap();
        let (id, rep) = c.compress_id(&sample, RankRule::eps(1e-2)).unwrap();
        assert_eq!(rep.rank, 1);
        assert!(rep.rel_error < 1e-10);
        assert_eq!(id.rank(), 1);
        let (_, rep) = c.compress_svd(&sample, RankRule::Fixed(1)).unwrap();
        assert!(rep.rel_error < 1e-10);
    }

    #[test]
    fn full_sample_svd_is_optimal_and_id_within_bound() {
        let k = graded(120, 25, 0.6, 5);
        let c = Compressor::new(k.as_ref()).unwrap();
        let s = c.singular_values().unwrap().to_vec();
        for r in [1, 3, 8] {
            let (_, svd_rep) = c.compress_svd(&all_rows(120), RankRule::Fixed(r)).unwrap();
            assert!((svd_rep.rel_error - s[r] / s[0]).abs() < 1e-8);
            let (id, id_rep) = c.compress_id(&all_rows(120), RankRule::Fixed(r)).unwrap();
            assert!(id_rep.rel_error >= svd_rep.rel_error * (1.0 - 1e-8));
            assert!(id_rep.rel_error <= id_rep.bound_id + 1e-8);
            assert_eq!(id_rep.domination_holds, Some(true));
            // The error computed on R agrees with the direct one on K.
            let direct = direct_error(&k, &id.reconstruct(k.as_ref()));
            assert!((direct - id_rep.rel_error).abs() < 1e-10);
        }
    }

    #[test]
    fn reduced_subsample_matches_direct_id() {
        let k = graded(400, 12, 0.5, 9);
        let c = Compressor::new(k.as_ref()).unwrap();
        let ctx = SamplingContext::new(400);
        let sample = sample_rows(
            &SamplingScheme::Uniform { replacement: false },
            &ctx,
            0.5,
            1,
        )
        .unwrap();
        let (id, rep) = c.compress_id(&sample, RankRule::Fixed(5)).unwrap();
        let ks = gather_rows(k.as_ref(), &sample.indices);
        let direct = interpolative_decomposition(ks.as_ref(), 5).unwrap();
        assert_eq!(id.skeleton, direct.skeleton);
        assert!((&id.projection - &direct.projection).norm_l2() < 1e-8);
        let err = direct_error(&k, &direct.reconstruct(k.as_ref()));
        assert!((err - rep.rel_error).abs() < 1e-10 * err.max(1.0));
    }

    #[test]
    fn rank_zero_reported() {
        let k = graded(50, 6, 0.5, 2);
        let c = Compressor::new(k.as_ref()).unwrap();
        let rule = RankRule::Eps {
            eps: 1e-2,
            reference: Some(1e12),
        };
        let (id, rep) = c.compress_id(&all_rows(50), rule).unwrap();
        assert_eq!(id.rank(), 0);
        assert!(rep.rank_zero);
        assert_eq!(rep.rel_error, 1.0);
    }

    #[test]
    fn subsample_dominated() {
        let k = graded(200, 15, 0.7, 13);
        let c = Compressor::new(k.as_ref()).unwrap();
        let ctx = SamplingContext::new(200)
            .with_matrix(k.as_ref())
            .with_rank(4);
        for seed in 0..20 {
            for scheme in [
                SamplingScheme::Uniform { replacement: false },
                SamplingScheme::EuclideanNorm { replacement: false },
                SamplingScheme::Leverage { rank: None },
                SamplingScheme::Bernoulli,
            ] {
                let Ok(sample) = sample_rows(&scheme, &ctx, 0.1, seed) else {
                    continue;
                };
                let Ok((_, rep)) = c.compress_id(&sample, RankRule::Fixed(4)) else {
                    continue;
                };
                assert_eq!(rep.domination_holds, Some(true));
                assert!(rep.sigma_r1_sample <= rep.sigma_r1_full.unwrap() * (1.0 + 1e-10));
            }
        }
    }

    #[test]
    fn power_path_agrees_with_exact() {
        let k = graded(300, 20, 0.6, 21);
        let exact = Compressor::new(k.as_ref()).unwrap();
        let approx = Compressor::with_budget(k.as_ref(), 10).unwrap();
        assert!(approx.singular_values().is_none());
        assert!((approx.norm() - exact.norm()).abs() < 1e-5 * exact.norm());
        let (_, a) = approx
            .compress_id(&all_rows(300), RankRule::Fixed(4))
            .unwrap();
        let (_, b) = exact
            .compress_id(&all_rows(300), RankRule::Fixed(4))
            .unwrap();
        assert!((a.rel_error - b.rel_error).abs() < 1e-4 * b.rel_error);
        assert!(a.bound_sampling.is_none());
    }

    #[test]
    fn empty_and_out_of_range_samples() {
        let k = gaussian(10, 3, 1);
        let c = Compressor::new(k.as_ref()).unwrap();
        let empty = RowSample {
            indices: vec![],
            fraction: 0.1,
            seed: 0,
        };
        assert!(matches!(
            c.compress_id(&empty, RankRule::Fixed(1)),
            Err(Error::EmptySample)
        ));
        let bad = RowSample {
            indices: vec![10],
            fraction: 0.1,
            seed: 0,
        };
        assert!(c.compress_id(&bad, RankRule::Fixed(1)).is_err());
    }

    #[test]
    fn mc_error_limits() {
        let k = graded(80, 10, 0.5, 3);
        let exact = |rows: &[usize]| gather_rows(k.as_ref(), rows);
        assert!(mc_error(k.as_ref(), &exact, 0.3, 4, 1)
            .unwrap()
            .iter()
            .all(|&e| e == 0.0));
        let zero = |rows: &[usize]| Mat::<f64>::zeros(rows.len(), 10);
        for e in mc_error(k.as_ref(), &zero, 0.3, 4, 1).unwrap() {
            assert!((e - 1.0).abs() < 1e-14);
        }
        assert!(mc_error(k.as_ref(), &zero, 0.0, 4, 1).is_err());
        assert!(mc_error(k.as_ref(), &zero, 0.5, 0, 1).is_err());
    }

    #[test]
    fn mc_error_full_sample_equals_exact() {
        let k = graded(150, 12, 0.5, 8);
        let c = Compressor::new(k.as_ref()).unwrap();
        let (id, rep) = c.compress_id(&all_rows(150), RankRule::Fixed(3)).unwrap();
        let est = mc_error(
            k.as_ref(),
            &|rows| id.reconstruct_rows(k.as_ref(), rows),
            1.0,
            1,
            4,
        )
        .unwrap();
        assert!(
            (est[0] - rep.rel_error).abs() < 1e-12,
            "{} vs {}",
            est[0],
            rep.rel_error
        );
    }

    #[test]
    fn mc_error_tracks_exact_on_gaussian_instance() {
        let ps = gen_normal(3, 4000, 31).unwrap();
        let split = split_sources_targets(&ps, &[0.0; 3], 60, 1.0).unwrap();
        let spec = KernelSpec::gaussian(0.6);
        let k = kernel_matrix(
            &spec,
            &split.targets(&ps).unwrap(),
            &split.sources(&ps).unwrap(),
        )
        .unwrap()
        .into_inner();
        let c = Compressor::new(k.as_ref()).unwrap();
        let (id, rep) = c
            .compress_id(&all_rows(k.nrows()), RankRule::eps(1e-2))
            .unwrap();
        let mut est = mc_error(
            k.as_ref(),
            &|rows| id.reconstruct_rows(k.as_ref(), rows),
            0.05,
            5,
            7,
        )
        .unwrap();
        est.sort_by(f64::total_cmp);
        let median = est[2];
        assert!(
            median <= 3.0 * rep.rel_error && median >= rep.rel_error / 3.0,
            "{median} vs {}",
            rep.rel_error
        );
    }

    fn skeleton_instance(seed: u64) -> (PointSet, PointSet, KernelSpec, Mat<f64>) {
        let ps = gen_normal(3, 1500, seed).unwrap();
        let split = split_sources_targets(&ps, &[0.0; 3], 40, 2.0).unwrap();
        let spec = KernelSpec::Laplace;
        let targets = split.targets(&ps).unwrap();
        let sources = split.sources(&ps).unwrap();
        let k = kernel_matrix(&spec, &targets, &sources)
            .unwrap()
            .into_inner();
        (targets, sources, spec, k)
    }

    #[test]
    fn skeleton_matvec() {
        let (targets, sources, spec, k) = skeleton_instance(3);
        let c = Compressor::new(k.as_ref()).unwrap();
        let q = ChargeVector::new((0..40).map(|j| (j as f64 * 0.37).sin()).collect()).unwrap();

        // Full skeleton reproduces direct summation.
        let (id, _) = c
            .compress_id(&all_rows(k.nrows()), RankRule::Fixed(40))
            .unwrap();
        let skel = sources.select(&id.skeleton).unwrap();
        let u = apply_skeleton(&id, &q, &spec, &targets, &skel).unwrap();
        let direct: Vec<f64> = (0..k.nrows())
            .map(|i| (0..40).map(|j| k[(i, j)] * q.values()[j]).sum())
            .collect();
        let dn = direct.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff = u
            .iter()
            .zip(&direct)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(diff <= 1e-10 * dn);

        // Truncated skeleton agrees with reconstruct-then-multiply.
        let (id, _) = c
            .compress_id(&all_rows(k.nrows()), RankRule::Fixed(6))
            .unwrap();
        let skel = sources.select(&id.skeleton).unwrap();
        let u = apply_skeleton(&id, &q, &spec, &targets, &skel).unwrap();
        let kh = id.reconstruct(k.as_ref());
        let via: Vec<f64> = (0..k.nrows())
            .map(|i| (0..40).map(|j| kh[(i, j)] * q.values()[j]).sum())
            .collect();
        let diff = u
            .iter()
            .zip(&via)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(diff <= 1e-9 * c.norm() * q.norm());

        let zero = ChargeVector::new(vec![0.0; 40]).unwrap();
        assert!(apply_skeleton(&id, &zero, &spec, &targets, &skel)
            .unwrap()
            .iter()
            .all(|&x| x == 0.0));
        assert!(apply_skeleton(&id, &q, &spec, &targets, &sources).is_err());
    }

    #[test]
    fn full_error_bound_examples() {
        let mut p = FullErrorParams {
            m: 10_000,
            n: 500,
            s_count: 100,
            r: 50,
            eps: 0.5,
            sigma_r1_k: 1e-3,
            sigma_r1_ks: 1e-3,
            q_norm: 1.0,
        };
        // Addends evaluated separately.
        let first = 1e-3;
        let printed_mid = (1.0 + 1.5 * 0.25 * 100.0f64).sqrt() * 1e-3;
        let corrected_mid = (1.0f64 + 601.0 - 1.0).sqrt() * 1e-3;
        let last = 11_250_001f64.sqrt() * 1e-3;
        let printed = bound_full_error(&p, BoundVariant::Printed);
        assert!((printed - (first + printed_mid + last)).abs() < 1e-12);
        let corrected = bound_full_error(&p, BoundVariant::Corrected);
        assert!((corrected - (first + corrected_mid + last)).abs() < 1e-12);
        assert!(corrected > printed);

        p.q_norm = 0.0;
        assert_eq!(bound_full_error(&p, BoundVariant::Printed), 0.0);
        p.q_norm = 1.0;
        p.sigma_r1_k = 0.0;
        p.sigma_r1_ks = 0.0;
        assert_eq!(bound_full_error(&p, BoundVariant::Corrected), 0.0);
    }

    #[test]
    fn constant_kernel_fractions() {
        // exp(-r^2 / 2h^2) rounds to exactly 1 for this bandwidth.
        let spec = KernelSpec::gaussian(1e200);
        let n = 25;
        let ps = gen_normal(2, 4 * n, 1).unwrap();
        let f = interaction_fractions(&ps, &spec, &[0.0, 0.0], n).unwrap();
        assert!((f.self_frac - 0.5).abs() < 1e-12);
        assert!((f.nn_frac - 0.5).abs() < 1e-12);
        assert!((f.far_frac - 0.5f64.sqrt()).abs() < 1e-12);
        assert!(interaction_fractions(&ps, &spec, &[0.0, 0.0], 51).is_err());
    }

    #[test]
    fn fractions_of_tall_far_field() {
        // Far block reduced to its R factor must give the same norm.
        let spec = KernelSpec::gaussian(0.8);
        let ps = gen_normal(3, 900, 2).unwrap();
        let f = interaction_fractions(&ps, &spec, &[0.0; 3], 20).unwrap();
        let (order, _) = order_by_distance(&ps, &[0.0; 3]);
        let sources = ps.select(&order[..20]).unwrap();
        let all = kernel_matrix(&spec, &ps, &sources).unwrap().into_inner();
        let far = kernel_matrix(&spec, &ps.select(&order[40..]).unwrap(), &sources)
            .unwrap()
            .into_inner();
        let want =
            singular_values(far.as_ref()).unwrap()[0] / singular_values(all.as_ref()).unwrap()[0];
        assert!((f.far_frac - want).abs() < 1e-12);
        assert!(f.self_frac <= 1.0 && f.nn_frac <= 1.0);
    }
}
