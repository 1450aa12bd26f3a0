//! Randomized checks of the deterministic and probabilistic bounds.

use faer::Mat;
use rand::seq::index;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use super::config::Suite;
use super::output::{fmt_f64, CsvRecord};
use crate::bounds_verify::{
    improvement_holds, orthonormal_gaussian, verify_chernoff_tails, verify_deterministic_bound,
    verify_projection_lemma, verify_uniform_sampling_theorem, BoundTrialResult, ChernoffConfig,
    UniformSamplingConfig, BOUND_SLACK,
};
use crate::compress::{
    apply_skeleton, bound_full_error, BoundVariant, ChargeVector, FullErrorParams,
};
use crate::datagen::gen_normal;
use crate::error::{Error, Result};
use crate::geometry::split_sources_targets;
use crate::kernel::{kernel_matrix, silverman_bandwidth, KernelSpec};
use crate::lowrank::{bound_id, epsilon_rank, interpolative_decomposition, singular_values};
use crate::rng::{derive_seed, seeded};

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub suite: Suite,
    pub trials: usize,
    pub skipped: usize,
    pub violations: usize,
    /// Largest `observed / bound` over checked trials with a bound above rounding level.
    pub max_ratio: f64,
    /// Highest violation rate that still passes.
    pub allowed_rate: f64,
    pub passed: bool,
    pub detail: String,
}

impl SuiteResult {
    pub fn failure_rate(&self) -> f64 {
        let checked = self.trials - self.skipped;
        if checked == 0 {
            0.0
        } else {
            self.violations as f64 / checked as f64
        }
    }
}

impl CsvRecord for SuiteResult {
    fn header() -> &'static [&'static str] {
        &[
            "suite",
            "trials",
            "skipped",
            "violations",
            "failure_rate",
            "allowed_rate",
            "max_ratio",
            "passed",
            "detail",
        ]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.suite.name().into(),
            self.trials.to_string(),
            self.skipped.to_string(),
            self.violations.to_string(),
            fmt_f64(self.failure_rate()),
            fmt_f64(self.allowed_rate),
            fmt_f64(self.max_ratio),
            self.passed.to_string(),
            self.detail.clone(),
        ]
    }
}

const NEGLIGIBLE_BOUND: f64 = 1e-10;

/// Tallies deterministic trials, re-checking against `scale * bound`.
fn tally(suite: Suite, results: &[BoundTrialResult], scale: f64, detail: String) -> SuiteResult {
    let checked: Vec<&BoundTrialResult> = results.iter().filter(|t| !t.skipped).collect();
    let ok = |t: &BoundTrialResult| {
        if scale == 1.0 {
            t.satisfied
        } else {
            t.observed <= scale * t.bound * (1.0 + BOUND_SLACK)
        }
    };
    let violations = checked.iter().filter(|t| !ok(t)).count();
    // Ratios against bounds at rounding level say nothing; leave them out.
    let max_ratio = checked
        .iter()
        .filter(|t| t.bound > NEGLIGIBLE_BOUND)
        .map(|t| t.observed / (scale * t.bound))
        .fold(0.0, f64::max);
    SuiteResult {
        suite,
        trials: results.len(),
        skipped: results.len() - checked.len(),
        violations,
        max_ratio,
        allowed_rate: 0.0,
        passed: violations == 0 && !checked.is_empty(),
        detail,
    }
}

fn gaussian(rows: usize, cols: usize, rng: &mut crate::rng::Rng) -> Mat<f64> {
    Mat::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// `U diag(sigma) V^T` with Haar-like `U`, `V`.
fn with_spectrum(m: usize, n: usize, sigma: &[f64], seed: u64) -> Mat<f64> {
    let k = sigma.len();
    let u = orthonormal_gaussian(m, k, derive_seed(seed, &[0]));
    let v = orthonormal_gaussian(n, k, derive_seed(seed, &[1]));
    let us = Mat::from_fn(m, k, |i, j| u[(i, j)] * sigma[j]);
    us * v.transpose()
}

/// A random spectrum: geometric decay, a numerically exact rank, or a
/// plateau followed by a cliff.
fn random_spectrum(k: usize, rng: &mut crate::rng::Rng) -> Vec<f64> {
    match rng.random_range(0..3) {
        0 => {
            let rate: f64 = rng.random_range(0.2..0.95);
            (0..k).map(|i| rate.powi(i as i32)).collect()
        }
        1 => {
            let rank = rng.random_range(1..=k);
            (0..k)
                .map(|i| if i < rank { 1.0 + (k - i) as f64 } else { 0.0 })
                .collect()
        }
        _ => {
            let cut = rng.random_range(1..=k);
            (0..k)
                .map(|i| {
                    if i < cut {
                        1.0
                    } else {
                        1e-3 * 0.5f64.powi(i as i32)
                    }
                })
                .collect()
        }
    }
}

/// `||A - A_S P|| <= sqrt(1 + n r (n - r)) sigma_{r+1}(A)` on random matrices.
pub fn id_bound_suite(trials: usize, seed: u64, scale: f64) -> Result<SuiteResult> {
    let mut results = Vec::with_capacity(trials);
    for t in 0..trials as u64 {
        let ts = derive_seed(seed, &[t]);
        let mut rng = seeded(ts);
        let m = rng.random_range(4..=60);
        let n = rng.random_range(3..=30);
        let sigma = random_spectrum(m.min(n), &mut rng);
        let a = with_spectrum(m, n, &sigma, derive_seed(ts, &[1]));
        let r = rng.random_range(1..m.min(n));
        let sv = singular_values(a.as_ref())?;
        match interpolative_decomposition(a.as_ref(), r) {
            Ok(id) => {
                let observed = singular_values((&a - id.reconstruct(a.as_ref())).as_ref())?[0];
                let bound = bound_id(n, r, sv[r]);
                let satisfied = observed <= bound * (1.0 + BOUND_SLACK) + BOUND_SLACK * sv[0];
                results.push(BoundTrialResult {
                    trial_seed: ts,
                    observed,
                    bound,
                    satisfied,
                    slack_ratio: if bound > 0.0 { observed / bound } else { 0.0 },
                    skipped: false,
                });
            }
            Err(Error::IllConditionedSkeleton { .. }) => results.push(BoundTrialResult {
                trial_seed: ts,
                observed: f64::NAN,
                bound: f64::NAN,
                satisfied: true,
                slack_ratio: f64::NAN,
                skipped: true,
            }),
            Err(e) => return Err(e),
        }
    }
    Ok(tally(
        Suite::IdBound,
        &results,
        scale,
        "random spectra, m <= 60, n <= 30".into(),
    ))
}

/// `||(I - P_Y) A||^2 <= ||S2||^2 + ||S2 O2 O1^+||^2` for Gaussian test matrices.
pub fn hmt_suite(trials: usize, seed: u64, scale: f64) -> Result<SuiteResult> {
    let mut results = Vec::with_capacity(trials);
    for t in 0..trials as u64 {
        let ts = derive_seed(seed, &[t]);
        let mut rng = seeded(ts);
        let (p, q) = (rng.random_range(10..=50), rng.random_range(8..=30));
        let sigma = random_spectrum(p.min(q), &mut rng);
        let a = with_spectrum(p, q, &sigma, derive_seed(ts, &[1]));
        let r = rng.random_range(1..=p.min(q).min(8));
        let s = (r + rng.random_range(0..=5)).min(q);
        let omega = gaussian(q, s, &mut rng);
        results.push(verify_deterministic_bound(
            a.as_ref(),
            omega.as_ref(),
            r,
            ts,
        )?);
    }
    // Bounds are squared norms; scale them squared too.
    Ok(tally(
        Suite::Hmt,
        &results,
        scale * scale,
        "Gaussian test matrices, oversampling 0..5".into(),
    ))
}

/// `||A - A~|| <= sigma_{r+1}(A) + ||A (I - P)||` for random row subsets.
pub fn projection_suite(trials: usize, seed: u64, scale: f64) -> Result<SuiteResult> {
    let mut results = Vec::with_capacity(trials);
    for t in 0..trials as u64 {
        let ts = derive_seed(seed, &[t]);
        let mut rng = seeded(ts);
        let (p, q) = (rng.random_range(10..=50), rng.random_range(5..=30));
        let sigma = random_spectrum(p.min(q), &mut rng);
        let a = with_spectrum(p, q, &sigma, derive_seed(ts, &[1]));
        let r = rng.random_range(1..=p.min(q) - 1);
        let k = rng.random_range(1..=p);
        let rows = index::sample(&mut rng, p, k).into_vec();
        results.push(verify_projection_lemma(a.as_ref(), &rows, r, ts)?);
    }
    Ok(tally(
        Suite::Projection,
        &results,
        scale,
        "random row subsets".into(),
    ))
}

/// Parameters of the uniform-sampling check.
pub const UNIFORM_M: usize = 400;
pub const UNIFORM_N: usize = 60;
pub const UNIFORM_R: usize = 5;

/// Failure rate of the sampling bound against `delta + 3 sqrt(delta (1 - delta) / trials)`.
pub fn uniform_suite(
    trials: usize,
    seed: u64,
    scale: f64,
    replacement: bool,
) -> Result<SuiteResult> {
    let mut cfg = UniformSamplingConfig::new(UNIFORM_M, UNIFORM_N, UNIFORM_R);
    cfg.trials = trials;
    cfg.seed = seed;
    cfg.replacement = replacement;
    cfg.bound_scale = scale;
    let out = verify_uniform_sampling_theorem(&cfg)?;
    let allowed = cfg.delta + 3.0 * (cfg.delta * (1.0 - cfg.delta) / trials as f64).sqrt();
    let max_ratio = out
        .trials
        .iter()
        .map(|t| t.slack_ratio)
        .filter(|r| !r.is_nan())
        .fold(0.0, f64::max);
    Ok(SuiteResult {
        suite: if replacement {
            Suite::UniformReplacement
        } else {
            Suite::Uniform
        },
        trials: out.trials.len(),
        skipped: 0,
        violations: out.violations,
        max_ratio,
        allowed_rate: allowed,
        passed: !out.infeasible && out.failure_rate() <= allowed,
        detail: format!(
            "m={} n={} r={} s={} coherence={} eps={} delta={}{}",
            cfg.m,
            cfg.n,
            cfg.r,
            out.s,
            fmt_f64(out.coherence),
            cfg.eps,
            cfg.delta,
            if out.infeasible { " infeasible" } else { "" }
        ),
    })
}

pub const CHERNOFF_EPS: [f64; 3] = [0.2, 0.5, 0.8];

/// Empirical eigenvalue tails of the sampled Gram matrix against the matrix Chernoff bounds.
pub fn chernoff_suite(trials: usize, seed: u64, scale: f64) -> Result<SuiteResult> {
    let cfg = ChernoffConfig {
        r: 5,
        m: 400,
        s: 400,
        eps: CHERNOFF_EPS.to_vec(),
        trials,
        seed,
        without_replacement: false,
    };
    let out = verify_chernoff_tails(&cfg)?;
    let mut violations = 0;
    let mut max_ratio: f64 = 0.0;
    let mut detail = Vec::new();
    for o in &out {
        let (bl, bu) = (scale * o.bound_lower, scale * o.bound_upper);
        let se = |b: f64| {
            let p = b.min(1.0);
            (p * (1.0 - p) / trials as f64).sqrt()
        };
        let lower_ok = o.empirical_lower <= bl + 3.0 * se(bl);
        let upper_ok = o.empirical_upper <= bu + 3.0 * se(bu);
        violations += usize::from(!lower_ok) + usize::from(!upper_ok);
        for (e, b) in [(o.empirical_lower, bl), (o.empirical_upper, bu)] {
            if b > 0.0 {
                max_ratio = max_ratio.max(e / b);
            }
        }
        detail.push(format!(
            "eps={}: lower {}<={} upper {}<={}",
            o.eps,
            fmt_f64(o.empirical_lower),
            fmt_f64(bl),
            fmt_f64(o.empirical_upper),
            fmt_f64(bu)
        ));
    }
    Ok(SuiteResult {
        suite: Suite::Chernoff,
        trials,
        skipped: 0,
        violations,
        max_ratio,
        allowed_rate: 0.0,
        passed: violations == 0,
        detail: detail.join("; "),
    })
}

/// `m/s` ratios for the improvement check.
pub const IMPROVEMENT_RATIOS: [f64; 9] = [1.0, 1.5, 2.0, 5.0, 10.0, 100.0, 1e3, 1e4, 1e6];

/// `sqrt(1 + 6 m/s) <= 1 + 2 m/s` over a grid of ratios.
pub fn improvement_suite(scale: f64) -> SuiteResult {
    let fails: Vec<f64> = IMPROVEMENT_RATIOS
        .iter()
        .copied()
        .filter(|&x| {
            if scale == 1.0 {
                !improvement_holds(x)
            } else {
                (1.0 + 6.0 * x).sqrt() > scale * (1.0 + 2.0 * x)
            }
        })
        .collect();
    let max_ratio = IMPROVEMENT_RATIOS
        .iter()
        .map(|&x| (1.0 + 6.0 * x).sqrt() / (scale * (1.0 + 2.0 * x)))
        .fold(0.0, f64::max);
    SuiteResult {
        suite: Suite::Improvement,
        trials: IMPROVEMENT_RATIOS.len(),
        skipped: 0,
        violations: fails.len(),
        max_ratio,
        allowed_rate: 0.0,
        passed: fails.is_empty(),
        detail: format!("ratios {IMPROVEMENT_RATIOS:?}"),
    }
}

/// One skeleton matvec instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkeletonTrial {
    pub error: f64,
    pub printed: f64,
    pub corrected: f64,
    pub rank: usize,
}

/// Potentials through the skeleton of a uniformly sampled far-field block
/// against both forms of the full error bound.
pub fn skeleton_trial(seed: u64) -> Result<SkeletonTrial> {
    let mut rng = seeded(seed);
    let (d, n_points, n) = (3, 1500, 40);
    let ps = gen_normal(d, n_points, derive_seed(seed, &[0]))?;
    let split = split_sources_targets(&ps, &[0.0; 3], n, 2.0)?;
    let spec = if rng.random_bool(0.5) {
        KernelSpec::Laplace
    } else {
        KernelSpec::gaussian(silverman_bandwidth(d, n_points) * rng.random_range(0.5..3.0))
    };
    let (targets, sources) = (split.targets(&ps)?, split.sources(&ps)?);
    let k = kernel_matrix(&spec, &targets, &sources)?.into_inner();
    let m = k.nrows();
    let s_count = ((0.3 * m as f64).ceil() as usize).max(n);
    let rows = index::sample(&mut rng, m, s_count.min(m)).into_vec();
    let ks = Mat::from_fn(rows.len(), n, |i, j| k[(rows[i], j)]);
    let sigma_s = singular_values(ks.as_ref())?;
    let sigma_k = singular_values(k.as_ref())?;
    let r = epsilon_rank(&sigma_s, 1e-3, None).max(1);
    let id = interpolative_decomposition(ks.as_ref(), r)?;
    let skeleton_points = sources.select(&id.skeleton)?;
    let q = ChargeVector::new((0..n).map(|_| StandardNormal.sample(&mut rng)).collect())?;
    let approx = apply_skeleton(&id, &q, &spec, &targets, &skeleton_points)?;
    let error = (0..m)
        .map(|i| {
            let exact: f64 = (0..n).map(|j| k[(i, j)] * q.values()[j]).sum();
            (exact - approx[i]).powi(2)
        })
        .sum::<f64>()
        .sqrt();
    let params = FullErrorParams {
        m,
        n,
        s_count: rows.len(),
        r,
        eps: 0.5,
        sigma_r1_k: sigma_k.get(r).copied().unwrap_or(0.0),
        sigma_r1_ks: sigma_s.get(r).copied().unwrap_or(0.0),
        q_norm: q.norm(),
    };
    Ok(SkeletonTrial {
        error,
        printed: bound_full_error(&params, BoundVariant::Printed),
        corrected: bound_full_error(&params, BoundVariant::Corrected),
        rank: r,
    })
}

pub fn skeleton_suite(trials: usize, seed: u64, scale: f64) -> Result<SuiteResult> {
    let mut violations = 0;
    let mut max_ratio: f64 = 0.0;
    let mut worst_printed: f64 = 0.0;
    for t in 0..trials as u64 {
        let tr = skeleton_trial(derive_seed(seed, &[t]))?;
        let tol = |b: f64| scale * b * (1.0 + BOUND_SLACK);
        if tr.error > tol(tr.printed) || tr.error > tol(tr.corrected) {
            violations += 1;
        }
        max_ratio = max_ratio.max(tr.error / (scale * tr.corrected));
        worst_printed = worst_printed.max(tr.error / (scale * tr.printed));
    }
    Ok(SuiteResult {
        suite: Suite::Skeleton,
        trials,
        skipped: 0,
        violations,
        max_ratio,
        allowed_rate: 0.0,
        passed: violations == 0,
        detail: format!(
            "max error/bound: corrected {}, printed {}",
            fmt_f64(max_ratio),
            fmt_f64(worst_printed)
        ),
    })
}

/// Runs `suites`; each gets its own seed derived from `seed` and its position in [`Suite::ALL`].
pub fn run_suites(
    suites: &[Suite],
    trials: usize,
    seed: u64,
    scale: f64,
) -> Result<Vec<SuiteResult>> {
    suites
        .iter()
        .map(|&s| {
            let idx = Suite::ALL.iter().position(|&x| x == s).expect("listed") as u64;
            let sseed = derive_seed(seed, &[idx]);
            match s {
                Suite::IdBound => id_bound_suite(trials, sseed, scale),
                Suite::Hmt => hmt_suite(trials, sseed, scale),
                Suite::Projection => projection_suite(trials, sseed, scale),
                Suite::Uniform => uniform_suite(trials, sseed, scale, false),
                Suite::UniformReplacement => uniform_suite(trials, sseed, scale, true),
                Suite::Chernoff => chernoff_suite(trials, sseed, scale),
                Suite::Improvement => Ok(improvement_suite(scale)),
                Suite::Skeleton => skeleton_suite(trials.min(50), sseed, scale),
            }
        })
        .collect()
}
