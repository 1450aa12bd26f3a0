//! Gaussian bandwidths at which the far-field block reaches a target ε-rank.
//!
//! As a function of `h` the rank rises from 0, peaks, and falls back towards
//! 1, so a target rank is reached once on each side of the peak.

use faer::{Mat, Side};

use super::config::{BandwidthSearchSpec, Branch, ExperimentConfig};
use super::experiment::{data_seed, trial_seed};
use super::output::{fmt_f64, CsvRecord};
use crate::datagen::PointSet;
use crate::error::{Error, Result};
use crate::geometry::split_sources_targets;
use crate::kernel::{kernel_matrix, silverman_bandwidth, KernelSpec};
use crate::lowrank::epsilon_rank;

/// Factor by which an edge of the bracket moves when the target lies outside it.
const EXPANSION_FACTOR: f64 = 2.0;
const MAX_EXPANSIONS: usize = 5;

/// ε-rank of `K(h)` with memoised evaluations.
pub struct RankProbe {
    targets: PointSet,
    sources: PointSet,
    eps: f64,
    evaluated: Vec<(f64, usize)>,
}

impl RankProbe {
    pub fn new(targets: PointSet, sources: PointSet, eps: f64) -> Self {
        Self {
            targets,
            sources,
            eps,
            evaluated: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.sources.len()
    }

    pub fn rank(&mut self, h: f64) -> Result<usize> {
        if let Some(&(_, r)) = self
            .evaluated
            .iter()
            .find(|(x, _)| x.to_bits() == h.to_bits())
        {
            return Ok(r);
        }
        let k = kernel_matrix(&KernelSpec::gaussian(h), &self.targets, &self.sources)?.into_inner();
        let r = gram_rank(&k, self.eps)?;
        self.evaluated.push((h, r));
        Ok(r)
    }

    /// Every `(h, rank)` pair computed so far, by increasing `h`.
    pub fn profile(&self) -> Vec<(f64, usize)> {
        let mut p = self.evaluated.clone();
        p.sort_by(|a, b| a.0.total_cmp(&b.0));
        p
    }
}

/// ε-rank from the eigenvalues of `K^T K`. The threshold `eps` on singular
/// values is `eps^2` on eigenvalues, far above the rounding floor of the Gram
/// matrix for the tolerances used here.
pub fn gram_rank(k: &Mat<f64>, eps: f64) -> Result<usize> {
    let g = k.transpose() * k;
    let ev = g
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigenvalues did not converge: {e:?}")))?;
    let sigma: Vec<f64> = ev.iter().rev().map(|&l| l.max(0.0).sqrt()).collect();
    Ok(epsilon_rank(&sigma, eps, None))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthResult {
    pub branch: Branch,
    pub h: f64,
    /// `h / h_S`.
    pub h_rel: f64,
    pub rank: usize,
    pub target: usize,
    pub iterations: usize,
    /// The rank came within tolerance of the target.
    pub converged: bool,
}

fn failed(message: String, probe: &RankProbe) -> Error {
    Error::SearchFailed {
        message,
        profile: probe.profile(),
    }
}

/// Bandwidth on `branch` where the ε-rank equals `round(kappa n)` within
/// `rank_tolerance_rows`. `h_s` scales the bracket.
pub fn search_branch(
    probe: &mut RankProbe,
    spec: &BandwidthSearchSpec,
    branch: Branch,
    h_s: f64,
) -> Result<BandwidthResult> {
    let n = probe.n();
    spec.validate(n)?;
    let target = (spec.kappa * n as f64).round() as usize;
    let tol = spec.rank_tolerance_rows;
    let hit = |r: usize| r.abs_diff(target) <= tol;
    let done = |h: f64, rank: usize, iterations: usize, converged: bool| BandwidthResult {
        branch,
        h,
        h_rel: h / h_s,
        rank,
        target,
        iterations,
        converged,
    };

    let [lo_rel, hi_rel] = spec.bracket;
    let g = spec.profile_points;
    let grid: Vec<f64> = (0..g)
        .map(|i| h_s * lo_rel * (hi_rel / lo_rel).powf(i as f64 / (g - 1) as f64))
        .collect();
    let ranks = grid
        .iter()
        .map(|&h| probe.rank(h))
        .collect::<Result<Vec<_>>>()?;
    let peak = (0..g).fold(0, |best, i| if ranks[i] > ranks[best] { i } else { best });
    if ranks[peak] + tol < target {
        return Err(failed(
            format!(
                "target rank {target} exceeds the largest rank {} on the profile",
                ranks[peak]
            ),
            probe,
        ));
    }

    // Bracket (a, b) with rank(a) on the low side of the target and rank(b)
    // on the high side, in the direction the branch is traversed.
    let (mut a, mut b) = match branch {
        Branch::SmallH => {
            let i = (0..=peak)
                .find(|&i| ranks[i] >= target)
                .expect("peak reaches target");
            if hit(ranks[i]) {
                return Ok(done(grid[i], ranks[i], 0, true));
            }
            if i > 0 {
                (grid[i - 1], grid[i])
            } else {
                let mut lo = grid[0];
                let mut expansions = 0;
                loop {
                    if expansions == MAX_EXPANSIONS {
                        return Err(failed(
                            "rank stays above the target at the smallest bandwidth".into(),
                            probe,
                        ));
                    }
                    lo /= EXPANSION_FACTOR;
                    expansions += 1;
                    let r = probe.rank(lo)?;
                    if hit(r) {
                        return Ok(done(lo, r, 0, true));
                    }
                    if r < target {
                        break;
                    }
                }
                (lo, lo * EXPANSION_FACTOR)
            }
        }
        Branch::LargeH => {
            let i = (peak..g)
                .rev()
                .find(|&i| ranks[i] >= target)
                .expect("peak reaches target");
            if hit(ranks[i]) {
                return Ok(done(grid[i], ranks[i], 0, true));
            }
            if i + 1 < g {
                (grid[i + 1], grid[i])
            } else {
                let mut hi = grid[g - 1];
                let mut expansions = 0;
                loop {
                    if expansions == MAX_EXPANSIONS {
                        return Err(failed(
                            "rank stays above the target at the largest bandwidth".into(),
                            probe,
                        ));
                    }
                    hi *= EXPANSION_FACTOR;
                    expansions += 1;
                    let r = probe.rank(hi)?;
                    if hit(r) {
                        return Ok(done(hi, r, 0, true));
                    }
                    if r < target {
                        break;
                    }
                }
                (hi, hi / EXPANSION_FACTOR)
            }
        }
    };

    // Geometric bisection: rank(a) < target <= rank(b) throughout.
    let mut best = (b, probe.rank(b)?);
    for it in 1..=spec.max_iters {
        let mid = (a * b).sqrt();
        let r = probe.rank(mid)?;
        if hit(r) {
            return Ok(done(mid, r, it, true));
        }
        if r.abs_diff(target) < best.1.abs_diff(target) {
            best = (mid, r);
        }
        if r >= target {
            b = mid;
        } else {
            a = mid;
        }
        if (a / b - 1.0).abs() < 1e-12 {
            return Ok(done(best.0, best.1, it, false));
        }
    }
    Ok(done(best.0, best.1, spec.max_iters, false))
}

/// One row per (trial, branch).
#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthRow {
    pub trial: usize,
    pub seed: u64,
    pub kappa: f64,
    pub branch: Branch,
    pub h_s: Option<f64>,
    pub result: std::result::Result<BandwidthResult, String>,
}

impl CsvRecord for BandwidthRow {
    fn header() -> &'static [&'static str] {
        &[
            "trial",
            "seed",
            "kappa",
            "branch",
            "target",
            "h_s",
            "h",
            "h_rel",
            "rank",
            "iterations",
            "converged",
            "status",
        ]
    }

    fn fields(&self) -> Vec<String> {
        let mut f = vec![
            self.trial.to_string(),
            self.seed.to_string(),
            fmt_f64(self.kappa),
            self.branch.name().into(),
        ];
        match &self.result {
            Ok(r) => f.extend([
                r.target.to_string(),
                self.h_s.map(fmt_f64).unwrap_or_default(),
                fmt_f64(r.h),
                fmt_f64(r.h_rel),
                r.rank.to_string(),
                r.iterations.to_string(),
                r.converged.to_string(),
                "ok".into(),
            ]),
            Err(e) => {
                f.extend(std::iter::repeat_n(String::new(), 7));
                f.push(format!("error: {e}"));
            }
        }
        f
    }
}

/// Runs the configured search on every trial; both branches share one rank cache.
pub fn run_bandwidth_search(cfg: &ExperimentConfig) -> Result<Vec<BandwidthRow>> {
    let spec = cfg.bandwidth_search()?.clone();
    let dataset = cfg.dataset()?;
    let split_cfg = cfg.split()?;
    spec.validate(split_cfg.n)?;
    let mut rows = Vec::new();
    for t in 0..cfg.trials {
        let seed = trial_seed(cfg.seed, t);
        let setup = (|| -> Result<(RankProbe, f64)> {
            let ps = dataset.generate(data_seed(seed))?;
            let split =
                split_sources_targets(&ps, &split_cfg.center(ps.dim()), split_cfg.n, split_cfg.xi)?;
            let h_s = silverman_bandwidth(ps.dim(), ps.len());
            Ok((
                RankProbe::new(split.targets(&ps)?, split.sources(&ps)?, spec.eps),
                h_s,
            ))
        })();
        let mut setup = setup.map_err(|e| e.to_string());
        for &branch in &spec.branches {
            let (h_s, result) = match &mut setup {
                Ok((probe, h_s)) => (
                    Some(*h_s),
                    search_branch(probe, &spec, branch, *h_s).map_err(|e| e.to_string()),
                ),
                Err(e) => (None, Err(e.clone())),
            };
            rows.push(BandwidthRow {
                trial: t,
                seed,
                kappa: spec.kappa,
                branch,
                h_s,
                result,
            });
        }
    }
    Ok(rows)
}
