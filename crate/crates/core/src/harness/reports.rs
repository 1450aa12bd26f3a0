//! Singular value spectra and interaction-strength tables over a grid of
//! dimensions and bandwidths.

use super::config::ExperimentConfig;
use super::experiment::{data_seed, trial_seed};
use super::output::{fmt_f64, fmt_opt, CsvRecord};
use crate::compress::{interaction_fractions, Compressor};
use crate::error::{Error, Result};
use crate::geometry::split_sources_targets;
use crate::kernel::{kernel_matrix, silverman_bandwidth};

/// Dimensions (`None` keeps the dataset's own) and relative bandwidths to visit.
fn grid(cfg: &ExperimentConfig) -> Result<(Vec<Option<usize>>, Vec<Option<f64>>)> {
    cfg.dataset()?;
    let dims = if cfg.sweep.dims.is_empty() {
        vec![None]
    } else {
        cfg.sweep.dims.iter().copied().map(Some).collect()
    };
    let hs = if cfg.sweep.h_rel.is_empty() {
        vec![None]
    } else {
        cfg.sweep.h_rel.iter().copied().map(Some).collect()
    };
    Ok((dims, hs))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumRow {
    pub d: usize,
    pub big_n: usize,
    pub n: usize,
    pub xi: f64,
    pub kernel: String,
    pub h: Option<f64>,
    pub h_rel: Option<f64>,
    pub trial: usize,
    pub seed: u64,
    /// Zero-based.
    pub index: usize,
    pub sigma: f64,
    /// `sigma / sigma_1`.
    pub sigma_rel: f64,
}

impl CsvRecord for SpectrumRow {
    fn header() -> &'static [&'static str] {
        &[
            "d",
            "N",
            "n",
            "xi",
            "kernel",
            "h",
            "h_rel",
            "trial",
            "seed",
            "index",
            "sigma",
            "sigma_rel",
        ]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.d.to_string(),
            self.big_n.to_string(),
            self.n.to_string(),
            fmt_f64(self.xi),
            self.kernel.clone(),
            fmt_opt(self.h),
            fmt_opt(self.h_rel),
            self.trial.to_string(),
            self.seed.to_string(),
            self.index.to_string(),
            fmt_f64(self.sigma),
            fmt_f64(self.sigma_rel),
        ]
    }
}

/// Singular values of the far-field block for every (d, h, trial).
pub fn run_spectra(cfg: &ExperimentConfig) -> Result<Vec<SpectrumRow>> {
    let (dims, hs) = grid(cfg)?;
    let split_cfg = cfg.split()?;
    let kernel = cfg.kernel()?;
    let mut rows = Vec::new();
    for &d in &dims {
        let ds = match d {
            Some(d) => cfg.dataset()?.with_dim(d),
            None => cfg.dataset()?.clone(),
        };
        for &h_rel in &hs {
            for t in 0..cfg.trials {
                let seed = trial_seed(cfg.seed, t);
                let ps = ds.generate(data_seed(seed))?;
                let spec = kernel.resolve_with(ps.dim(), ps.len(), h_rel)?;
                let split = split_sources_targets(
                    &ps,
                    &split_cfg.center(ps.dim()),
                    split_cfg.n,
                    split_cfg.xi,
                )?;
                let k =
                    kernel_matrix(&spec, &split.targets(&ps)?, &split.sources(&ps)?)?.into_inner();
                let comp = Compressor::with_budget(k.as_ref(), usize::MAX)?;
                let sigma = comp.singular_values().ok_or_else(|| {
                    Error::Numerical("matrix too large for an exact spectrum".into())
                })?;
                let keep = cfg.sweep.max_values.unwrap_or(sigma.len()).min(sigma.len());
                let h_s = silverman_bandwidth(ps.dim(), ps.len());
                for (i, &s) in sigma[..keep].iter().enumerate() {
                    rows.push(SpectrumRow {
                        d: ps.dim(),
                        big_n: ps.len(),
                        n: split_cfg.n,
                        xi: split_cfg.xi,
                        kernel: spec.name().into(),
                        h: spec.bandwidth(),
                        h_rel: spec
                            .bandwidth()
                            .filter(|_| spec.name() == "gaussian")
                            .map(|h| h / h_s),
                        trial: t,
                        seed,
                        index: i,
                        sigma: s,
                        sigma_rel: if sigma[0] > 0.0 { s / sigma[0] } else { 0.0 },
                    });
                }
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InteractionRow {
    pub d: usize,
    pub big_n: usize,
    pub n: usize,
    pub kernel: String,
    pub h: Option<f64>,
    pub h_rel: Option<f64>,
    pub trial: usize,
    pub seed: u64,
    pub self_pct: f64,
    pub nn_pct: f64,
    pub far_pct: f64,
}

impl CsvRecord for InteractionRow {
    fn header() -> &'static [&'static str] {
        &[
            "d", "N", "n", "kernel", "h", "h_rel", "trial", "seed", "self_pct", "nn_pct", "far_pct",
        ]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.d.to_string(),
            self.big_n.to_string(),
            self.n.to_string(),
            self.kernel.clone(),
            fmt_opt(self.h),
            fmt_opt(self.h_rel),
            self.trial.to_string(),
            self.seed.to_string(),
            fmt_f64(self.self_pct),
            fmt_f64(self.nn_pct),
            fmt_f64(self.far_pct),
        ]
    }
}

/// Shares of `||K||_2` from the source block, the next `n` neighbours and the rest,
/// in percent, for every (d, h, trial).
pub fn run_interactions(cfg: &ExperimentConfig) -> Result<Vec<InteractionRow>> {
    let (dims, hs) = grid(cfg)?;
    let split_cfg = cfg.split()?;
    let kernel = cfg.kernel()?;
    let mut rows = Vec::new();
    for &d in &dims {
        let ds = match d {
            Some(d) => cfg.dataset()?.with_dim(d),
            None => cfg.dataset()?.clone(),
        };
        for &h_rel in &hs {
            for t in 0..cfg.trials {
                let seed = trial_seed(cfg.seed, t);
                let ps = ds.generate(data_seed(seed))?;
                let spec = kernel.resolve_with(ps.dim(), ps.len(), h_rel)?;
                let f =
                    interaction_fractions(&ps, &spec, &split_cfg.center(ps.dim()), split_cfg.n)?;
                let h_s = silverman_bandwidth(ps.dim(), ps.len());
                rows.push(InteractionRow {
                    d: ps.dim(),
                    big_n: ps.len(),
                    n: split_cfg.n,
                    kernel: spec.name().into(),
                    h: spec.bandwidth(),
                    h_rel: spec
                        .bandwidth()
                        .filter(|_| spec.name() == "gaussian")
                        .map(|h| h / h_s),
                    trial: t,
                    seed,
                    self_pct: 100.0 * f.self_frac,
                    nn_pct: 100.0 * f.nn_frac,
                    far_pct: 100.0 * f.far_frac,
                });
            }
        }
    }
    Ok(rows)
}
