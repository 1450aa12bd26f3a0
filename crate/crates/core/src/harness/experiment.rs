//! Compression sweeps over methods, sampling schemes and sampling fractions.

use faer::Mat;

use super::config::ExperimentConfig;
use super::output::{fmt_f64, fmt_opt, fmt_opt_usize, CsvRecord};
use crate::compress::{gather_rows, mc_error, Compressor, Method};
use crate::datagen::PointSet;
use crate::error::Result;
use crate::geometry::{split_sources_targets, SourceTargetSplit};
use crate::kernel::{kernel_matrix, KernelSpec};
use crate::lowrank::row_leverage_scores;
use crate::rng::derive_seed;
use crate::sampling::{sample_rows, SamplingContext, SamplingScheme};

/// Seed of trial `t`.
pub fn trial_seed(master: u64, t: usize) -> u64 {
    derive_seed(master, &[t as u64])
}

/// Seed for the point cloud of a trial.
pub fn data_seed(trial_seed: u64) -> u64 {
    derive_seed(trial_seed, &[0])
}

/// Seed for one subsample within a trial.
pub fn sample_seed(trial_seed: u64, scheme_idx: usize, s_idx: usize) -> u64 {
    derive_seed(trial_seed, &[1, scheme_idx as u64, s_idx as u64])
}

fn mc_seed(trial_seed: u64, scheme_idx: usize, s_idx: usize, method_idx: usize) -> u64 {
    derive_seed(
        trial_seed,
        &[2, scheme_idx as u64, s_idx as u64, method_idx as u64],
    )
}

/// Data, split and interaction matrix for one trial.
pub struct TrialSetup {
    pub points: PointSet,
    pub split: SourceTargetSplit,
    pub spec: KernelSpec,
    /// Targets by sources.
    pub k: Mat<f64>,
}

pub fn setup_trial(cfg: &ExperimentConfig, trial_seed: u64) -> Result<TrialSetup> {
    let points = cfg.dataset()?.generate(data_seed(trial_seed))?;
    let split_cfg = cfg.split()?;
    let spec = cfg.kernel()?.resolve(points.dim(), points.len())?;
    let split = split_sources_targets(
        &points,
        &split_cfg.center(points.dim()),
        split_cfg.n,
        split_cfg.xi,
    )?;
    let k = kernel_matrix(&spec, &split.targets(&points)?, &split.sources(&points)?)?.into_inner();
    Ok(TrialSetup {
        points,
        split,
        spec,
        k,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub dataset: String,
    pub d: Option<usize>,
    pub big_n: Option<usize>,
    pub n: usize,
    pub xi: f64,
    pub kernel: String,
    pub h: Option<f64>,
    pub method: Method,
    pub scheme: String,
    pub s: f64,
    pub trial: usize,
    pub seed: u64,
    pub rank: Option<usize>,
    pub rel_error: Option<f64>,
    pub mc_error: Option<f64>,
    pub bound_id: Option<f64>,
    pub bound_sampling: Option<f64>,
    pub elapsed_ms: Option<f64>,
    /// `ok`, `rank_zero`, or `error: ...`.
    pub status: String,
}

impl ExperimentRow {
    pub fn is_ok(&self) -> bool {
        self.rel_error.is_some()
    }
}

impl CsvRecord for ExperimentRow {
    fn header() -> &'static [&'static str] {
        &[
            "dataset",
            "d",
            "N",
            "n",
            "xi",
            "kernel",
            "h",
            "method",
            "scheme",
            "s",
            "trial",
            "seed",
            "rank",
            "rel_error",
            "mc_error",
            "bound_id",
            "bound_sampling",
            "elapsed_ms",
            "status",
        ]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.dataset.clone(),
            fmt_opt_usize(self.d),
            fmt_opt_usize(self.big_n),
            self.n.to_string(),
            fmt_f64(self.xi),
            self.kernel.clone(),
            fmt_opt(self.h),
            self.method.name().into(),
            self.scheme.clone(),
            fmt_f64(self.s),
            self.trial.to_string(),
            self.seed.to_string(),
            fmt_opt_usize(self.rank),
            fmt_opt(self.rel_error),
            fmt_opt(self.mc_error),
            fmt_opt(self.bound_id),
            fmt_opt(self.bound_sampling),
            fmt_opt(self.elapsed_ms),
            self.status.clone(),
        ]
    }
}

/// Aggregate over trials for one (method, scheme, s) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub scheme: String,
    pub s: f64,
    pub trials: usize,
    pub failures: usize,
    pub mean_rel_error: Option<f64>,
    /// Sample standard deviation; absent for fewer than two trials.
    pub std_rel_error: Option<f64>,
    pub mean_rank: Option<usize>,
    pub mean_mc_error: Option<f64>,
}

impl CsvRecord for SummaryRow {
    fn header() -> &'static [&'static str] {
        &[
            "method",
            "scheme",
            "s",
            "trials",
            "failures",
            "mean_rel_error",
            "std_rel_error",
            "mean_rank",
            "mean_mc_error",
        ]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.method.name().into(),
            self.scheme.clone(),
            fmt_f64(self.s),
            self.trials.to_string(),
            self.failures.to_string(),
            fmt_opt(self.mean_rel_error),
            fmt_opt(self.std_rel_error),
            fmt_opt_usize(self.mean_rank),
            fmt_opt(self.mean_mc_error),
        ]
    }
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentOutput {
    pub rows: Vec<ExperimentRow>,
    pub summary: Vec<SummaryRow>,
}

fn mean_std(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = (xs.len() > 1)
        .then(|| (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
    (Some(mean), std)
}

pub fn summarize(rows: &[ExperimentRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(Method, String, u64)> = Vec::new();
    for r in rows {
        let key = (r.method, r.scheme.clone(), r.s.to_bits());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(method, scheme, s_bits)| {
            let cell: Vec<&ExperimentRow> = rows
                .iter()
                .filter(|r| r.method == method && r.scheme == scheme && r.s.to_bits() == s_bits)
                .collect();
            let ok: Vec<&&ExperimentRow> = cell.iter().filter(|r| r.is_ok()).collect();
            let errs: Vec<f64> = ok.iter().filter_map(|r| r.rel_error).collect();
            let (mean, std) = mean_std(&errs);
            let ranks: Vec<f64> = ok.iter().filter_map(|r| r.rank.map(|v| v as f64)).collect();
            let mcs: Vec<f64> = ok.iter().filter_map(|r| r.mc_error).collect();
            SummaryRow {
                method,
                scheme,
                s: f64::from_bits(s_bits),
                trials: cell.len(),
                failures: cell.len() - ok.len(),
                mean_rel_error: mean,
                std_rel_error: std,
                mean_rank: mean_std(&ranks).0.map(|m| m.round() as usize),
                mean_mc_error: mean_std(&mcs).0,
            }
        })
        .collect()
}

/// Runs every trial of the configured sweep. Failures inside a trial become
/// rows with an `error:` status; only a missing config section is an `Err`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let dataset = cfg.dataset()?;
    let split_cfg = cfg.split()?;
    cfg.kernel()?;
    let mut rows = Vec::new();
    for t in 0..cfg.trials {
        let seed = trial_seed(cfg.seed, t);
        let template = ExperimentRow {
            dataset: dataset.name().into(),
            d: None,
            big_n: None,
            n: split_cfg.n,
            xi: split_cfg.xi,
            kernel: cfg.kernel()?.family_name().into(),
            h: None,
            method: Method::Id,
            scheme: String::new(),
            s: 0.0,
            trial: t,
            seed,
            rank: None,
            rel_error: None,
            mc_error: None,
            bound_id: None,
            bound_sampling: None,
            elapsed_ms: None,
            status: String::new(),
        };
        run_trial(cfg, seed, template, &mut rows);
    }
    // Output order is (scheme, s, trial, method) whatever order trials ran in.
    let c = &cfg.compress;
    let labels: Vec<String> = c.schemes.iter().map(|s| s.label()).collect();
    rows.sort_by_key(|r| {
        (
            labels.iter().position(|l| *l == r.scheme),
            c.s_grid.iter().position(|s| s.to_bits() == r.s.to_bits()),
            r.trial,
            c.methods.iter().position(|m| *m == r.method),
        )
    });
    let summary = summarize(&rows);
    Ok(ExperimentOutput { rows, summary })
}

fn error_row(
    template: &ExperimentRow,
    method: Method,
    scheme: &SamplingScheme,
    s: f64,
    msg: &str,
) -> ExperimentRow {
    ExperimentRow {
        method,
        scheme: scheme.label(),
        s,
        status: format!("error: {msg}"),
        ..template.clone()
    }
}

fn run_trial(
    cfg: &ExperimentConfig,
    seed: u64,
    mut template: ExperimentRow,
    rows: &mut Vec<ExperimentRow>,
) {
    let c = &cfg.compress;
    let fail_all = |template: &ExperimentRow, msg: &str, rows: &mut Vec<ExperimentRow>| {
        for &method in &c.methods {
            for scheme in &c.schemes {
                for &s in &c.s_grid {
                    rows.push(error_row(template, method, scheme, s, msg));
                }
            }
        }
    };
    let setup = match setup_trial(cfg, seed) {
        Ok(s) => s,
        Err(e) => return fail_all(&template, &e.to_string(), rows),
    };
    template.d = Some(setup.points.dim());
    template.big_n = Some(setup.points.len());
    template.kernel = setup.spec.name().into();
    template.h = setup.spec.bandwidth();

    let comp = match Compressor::with_budget(setup.k.as_ref(), cfg.memory_budget) {
        Ok(c) => c,
        Err(e) => return fail_all(&template, &e.to_string(), rows),
    };
    let rule = cfg
        .rank
        .rule(comp.singular_values())
        .map_err(|e| e.to_string());
    // Rank used for leverage scores when the scheme does not fix its own.
    let lev_rank = match &rule {
        Ok(crate::compress::RankRule::Fixed(r)) => Some(*r),
        _ => comp
            .singular_values()
            .map(|s| crate::lowrank::epsilon_rank(s, cfg.rank.eps, None)),
    };
    let needs_lev = c
        .schemes
        .iter()
        .any(|s| matches!(s, SamplingScheme::Leverage { rank: None }));
    let leverage = match (needs_lev, lev_rank) {
        (true, Some(r)) if r > 0 => {
            Some(row_leverage_scores(setup.k.as_ref(), r).map(|l| l.scores))
        }
        _ => None,
    };

    let m = setup.k.nrows();
    for (si, scheme) in c.schemes.iter().enumerate() {
        for (gi, &s) in c.s_grid.iter().enumerate() {
            let sseed = sample_seed(seed, si, gi);
            let mut ctx = SamplingContext::new(m)
                .with_matrix(setup.k.as_ref())
                .with_split(&setup.split);
            if let Some(r) = lev_rank.filter(|&r| r > 0) {
                ctx = ctx.with_rank(r);
            }
            if let (SamplingScheme::Leverage { rank: None }, Some(Ok(l))) = (scheme, &leverage) {
                ctx = ctx.with_leverage(l);
            }
            let sample = match &rule {
                Err(msg) => Err(msg.clone()),
                Ok(_) => sample_rows(scheme, &ctx, s, sseed).map_err(|e| e.to_string()),
            };
            for (mi, &method) in c.methods.iter().enumerate() {
                let sample = match &sample {
                    Ok(x) => x,
                    Err(msg) => {
                        rows.push(error_row(&template, method, scheme, s, msg));
                        continue;
                    }
                };
                let rule = *rule.as_ref().expect("checked above");
                let result = match method {
                    Method::Id => comp.compress_id(sample, rule).and_then(|(id, rep)| {
                        let mc = match c.mc {
                            Some(mc) => {
                                let rec = |r: &[usize]| id.reconstruct_rows(setup.k.as_ref(), r);
                                Some(mc_error(
                                    setup.k.as_ref(),
                                    &rec,
                                    mc.s_mc,
                                    mc.n_mc,
                                    mc_seed(seed, si, gi, mi),
                                )?)
                            }
                            None => None,
                        };
                        Ok((rep, mc))
                    }),
                    Method::Svd => comp.compress_svd(sample, rule).and_then(|(v, rep)| {
                        let mc = match c.mc {
                            Some(mc) => {
                                let vt = v.transpose().to_owned();
                                let rec =
                                    |r: &[usize]| (gather_rows(setup.k.as_ref(), r) * &v) * &vt;
                                Some(mc_error(
                                    setup.k.as_ref(),
                                    &rec,
                                    mc.s_mc,
                                    mc.n_mc,
                                    mc_seed(seed, si, gi, mi),
                                )?)
                            }
                            None => None,
                        };
                        Ok((rep, mc))
                    }),
                };
                rows.push(match result {
                    Ok((rep, mc)) => ExperimentRow {
                        method,
                        scheme: scheme.label(),
                        s,
                        rank: Some(rep.rank),
                        rel_error: Some(rep.rel_error),
                        mc_error: mc.map(|v| v.iter().sum::<f64>() / v.len() as f64),
                        bound_id: Some(rep.bound_id),
                        bound_sampling: rep.bound_sampling,
                        elapsed_ms: cfg
                            .record_timings
                            .then(|| rep.timings.total().as_secs_f64() * 1e3),
                        status: if rep.rank_zero {
                            "rank_zero".into()
                        } else {
                            "ok".into()
                        },
                        ..template.clone()
                    },
                    Err(e) => error_row(&template, method, scheme, s, &e.to_string()),
                });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::output::csv_string;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig::from_toml(
            r#"
seed = 11
trials = 2
[dataset]
kind = "normal"
d = 3
points = 600
[split]
n = 30
xi = 1.5
[kernel]
family = "gaussian"
h_rel = 1.0
[compress]
methods = ["id", "svd"]
schemes = [{ kind = "uniform" }, { kind = "leverage" }, { kind = "nearest_neighbor" }]
s_grid = [0.2, 1.0]
mc = { s_mc = 0.5, n_mc = 2 }
"#,
        )
        .unwrap()
    }

    #[test]
    fn sweep_produces_all_rows() {
        let cfg = small_config();
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.rows.len(), 2 * 2 * 3 * 2);
        assert!(out.rows.iter().all(|r| r.status == "ok"), "{:?}", out.rows);
        assert_eq!(out.summary.len(), 2 * 3 * 2);
        // Full-row ID and SVD are within their bounds.
        for r in out.rows.iter().filter(|r| r.s == 1.0) {
            assert!(r.rel_error.unwrap() <= r.bound_id.unwrap() + 1e-12);
        }
        let first = &out.rows[0];
        assert_eq!(first.d, Some(3));
        assert_eq!(first.big_n, Some(600));
        assert!(first.elapsed_ms.is_none());
    }

    #[test]
    fn sweep_is_deterministic() {
        let cfg = small_config();
        let a = csv_string(&run_experiment(&cfg).unwrap().rows).unwrap();
        let b = csv_string(&run_experiment(&cfg).unwrap().rows).unwrap();
        assert_eq!(a, b);
        let mut other = cfg.clone();
        other.seed = 12;
        assert_ne!(
            a,
            csv_string(&run_experiment(&other).unwrap().rows).unwrap()
        );
    }

    #[test]
    fn infeasible_split_is_recorded() {
        let mut cfg = small_config();
        cfg.split.as_mut().unwrap().xi = 1e6;
        cfg.trials = 1;
        let out = run_experiment(&cfg).unwrap();
        assert!(out.rows.iter().all(|r| r.status.starts_with("error:")));
        assert!(out
            .summary
            .iter()
            .all(|s| s.failures == s.trials && s.mean_rel_error.is_none()));
    }

    #[test]
    fn summary_statistics() {
        let row = |e: f64, rank: usize| ExperimentRow {
            dataset: "normal".into(),
            d: Some(1),
            big_n: Some(10),
            n: 2,
            xi: 1.0,
            kernel: "laplace".into(),
            h: None,
            method: Method::Id,
            scheme: "uniform".into(),
            s: 0.5,
            trial: 0,
            seed: 0,
            rank: Some(rank),
            rel_error: Some(e),
            mc_error: None,
            bound_id: Some(1.0),
            bound_sampling: None,
            elapsed_ms: None,
            status: "ok".into(),
        };
        let s = summarize(&[row(1.0, 2), row(3.0, 3)]);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].mean_rel_error, Some(2.0));
        assert!((s[0].std_rel_error.unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(s[0].mean_rank, Some(3));
    }
}
