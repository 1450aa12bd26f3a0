//! TOML experiment configuration. Unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::compress::{Method, RankRule, DEFAULT_MEMORY_BUDGET};
use crate::datagen::{
    gen_low_intrinsic, gen_normal, load_points, rescale_unit_hypercube, LowIntrinsicSpec, PointSet,
};
use crate::error::{Error, Result};
use crate::kernel::{silverman_bandwidth, KernelSpec};
use crate::sampling::SamplingScheme;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; every other seed is derived from it.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// CSV destination; standard output when unset.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Above `m * n` entries, spectral norms switch to power iteration.
    #[serde(default = "default_budget")]
    pub memory_budget: usize,
    /// Fill the `elapsed_ms` column. Off by default so output is reproducible.
    #[serde(default)]
    pub record_timings: bool,
    #[serde(default)]
    pub dataset: Option<DatasetConfig>,
    #[serde(default)]
    pub split: Option<SplitConfig>,
    #[serde(default)]
    pub kernel: Option<KernelConfig>,
    #[serde(default)]
    pub rank: RankConfig,
    #[serde(default)]
    pub compress: CompressConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub bandwidth_search: Option<BandwidthSearchSpec>,
    #[serde(default)]
    pub verify: VerifyConfig,
}

fn default_trials() -> usize {
    15
}

fn default_budget() -> usize {
    DEFAULT_MEMORY_BUDGET
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetConfig {
    /// Standard normal points.
    Normal { d: usize, points: usize },
    /// Normal in `intrinsic_dim` dimensions, zero-padded to `d`, rotated, plus uniform noise.
    LowIntrinsic {
        intrinsic_dim: usize,
        d: usize,
        points: usize,
        #[serde(default = "default_noise")]
        noise: f64,
    },
    /// Points read from a delimited text file.
    File {
        path: PathBuf,
        #[serde(default)]
        rescale: bool,
    },
}

fn default_noise() -> f64 {
    LowIntrinsicSpec::DEFAULT_NOISE
}

impl DatasetConfig {
    pub fn name(&self) -> &'static str {
        match self {
            DatasetConfig::Normal { .. } => "normal",
            DatasetConfig::LowIntrinsic { .. } => "low_intrinsic",
            DatasetConfig::File { .. } => "file",
        }
    }

    /// Same dataset in dimension `d`; files keep their own dimension.
    pub fn with_dim(&self, d: usize) -> Self {
        let mut out = self.clone();
        match &mut out {
            DatasetConfig::Normal { d: dd, .. } | DatasetConfig::LowIntrinsic { d: dd, .. } => {
                *dd = d
            }
            DatasetConfig::File { .. } => {}
        }
        out
    }

    pub fn generate(&self, seed: u64) -> Result<PointSet> {
        match self {
            DatasetConfig::Normal { d, points } => gen_normal(*d, *points, seed),
            DatasetConfig::LowIntrinsic {
                intrinsic_dim,
                d,
                points,
                noise,
            } => {
                let spec = LowIntrinsicSpec {
                    intrinsic_dim: *intrinsic_dim,
                    ambient_dim: *d,
                    noise_amplitude: *noise,
                };
                gen_low_intrinsic(&spec, *points, seed)
            }
            DatasetConfig::File { path, rescale } => {
                let ps = load_points(path)?;
                Ok(if *rescale {
                    rescale_unit_hypercube(&ps)
                } else {
                    ps
                })
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            DatasetConfig::Normal { d, points } if d == 0 || points == 0 => {
                Err(Error::Config("dataset needs d >= 1 and points >= 1".into()))
            }
            DatasetConfig::LowIntrinsic {
                intrinsic_dim,
                d,
                points,
                noise,
            } => {
                let spec = LowIntrinsicSpec {
                    intrinsic_dim,
                    ambient_dim: d,
                    noise_amplitude: noise,
                };
                spec.validate().map_err(|e| Error::Config(e.to_string()))?;
                if points == 0 {
                    return Err(Error::Config("dataset needs points >= 1".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    /// Number of sources.
    pub n: usize,
    #[serde(default = "default_xi")]
    pub xi: f64,
    /// Defaults to the origin.
    #[serde(default)]
    pub center: Option<Vec<f64>>,
}

fn default_xi() -> f64 {
    1.0
}

impl SplitConfig {
    pub fn center(&self, d: usize) -> Vec<f64> {
        self.center.clone().unwrap_or_else(|| vec![0.0; d])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    Gaussian,
    Laplace,
    Polynomial,
}

/// Kernel parameters. A Gaussian bandwidth is given either absolutely (`h`)
/// or in units of the Silverman bandwidth of the data (`h_rel`).
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub family: KernelFamily,
    #[serde(default)]
    pub h: Option<f64>,
    #[serde(default)]
    pub h_rel: Option<f64>,
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub p: Option<u32>,
}

impl KernelConfig {
    pub fn family_name(&self) -> &'static str {
        match self.family {
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::Laplace => "laplace",
            KernelFamily::Polynomial => "polynomial",
        }
    }

    /// Bandwidth in units of `h_S`, when the kernel has one.
    pub fn resolve(&self, d: usize, points: usize) -> Result<KernelSpec> {
        self.resolve_with(d, points, None)
    }

    /// As [`resolve`](Self::resolve), with `h_rel` replaced by `override_rel` when given.
    pub fn resolve_with(
        &self,
        d: usize,
        points: usize,
        override_rel: Option<f64>,
    ) -> Result<KernelSpec> {
        let h_s = silverman_bandwidth(d, points);
        let h = match (override_rel, self.h_rel, self.h) {
            (Some(rel), _, _) | (None, Some(rel), None) => Some(rel * h_s),
            (None, None, h) => h,
            (None, Some(_), Some(_)) => {
                return Err(Error::Config(
                    "give either kernel.h or kernel.h_rel, not both".into(),
                ))
            }
        };
        let spec = match self.family {
            KernelFamily::Gaussian => KernelSpec::gaussian(
                h.ok_or_else(|| Error::Config("Gaussian kernel needs h or h_rel".into()))?,
            ),
            KernelFamily::Laplace => {
                if h.is_some() || self.c.is_some() || self.p.is_some() {
                    return Err(Error::Config(
                        "the Laplace kernel takes no parameters".into(),
                    ));
                }
                KernelSpec::Laplace
            }
            KernelFamily::Polynomial => KernelSpec::polynomial(
                h.unwrap_or(1.0),
                self.c.unwrap_or(1.0),
                self.p
                    .ok_or_else(|| Error::Config("polynomial kernel needs p".into()))?,
            ),
        };
        spec.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(spec)
    }
}

/// Which singular values the ε-rank is measured on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankReference {
    /// ε-rank of the full matrix `K`, then used as a fixed rank for every subsample.
    #[default]
    Full,
    /// ε-rank of each subsample against its own `sigma_1`.
    Sample,
    /// ε-rank of each subsample against `sigma_1(K)`.
    SampleVsFull,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankConfig {
    #[serde(default = "default_eps")]
    pub eps: f64,
    /// Overrides `eps` when set.
    #[serde(default)]
    pub fixed: Option<usize>,
    #[serde(default)]
    pub reference: RankReference,
}

fn default_eps() -> f64 {
    1e-2
}

impl Default for RankConfig {
    fn default() -> Self {
        Self {
            eps: default_eps(),
            fixed: None,
            reference: RankReference::default(),
        }
    }
}

impl RankConfig {
    /// The per-subsample rule given the spectrum of the full matrix, if known.
    pub fn rule(&self, full_sigma: Option<&[f64]>) -> Result<RankRule> {
        if let Some(r) = self.fixed {
            return Ok(RankRule::Fixed(r));
        }
        match self.reference {
            RankReference::Sample => Ok(RankRule::eps(self.eps)),
            RankReference::Full => {
                let s = full_sigma.ok_or_else(|| {
                    Error::Numerical("rank.reference = \"full\" needs the exact spectrum of K; raise memory_budget".into())
                })?;
                Ok(RankRule::Fixed(crate::lowrank::epsilon_rank(
                    s, self.eps, None,
                )))
            }
            RankReference::SampleVsFull => {
                let s = full_sigma.ok_or_else(|| {
                    Error::Numerical("rank.reference = \"sample_vs_full\" needs sigma_1(K)".into())
                })?;
                Ok(RankRule::Eps {
                    eps: self.eps,
                    reference: s.first().copied(),
                })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub s_mc: f64,
    pub n_mc: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompressConfig {
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_schemes")]
    pub schemes: Vec<SamplingScheme>,
    #[serde(default = "default_s_grid")]
    pub s_grid: Vec<f64>,
    /// Monte Carlo error estimate; the CSV reports the mean over `n_mc` draws.
    #[serde(default)]
    pub mc: Option<McConfig>,
}

fn default_methods() -> Vec<Method> {
    vec![Method::Id]
}

fn default_schemes() -> Vec<SamplingScheme> {
    vec![SamplingScheme::Uniform { replacement: false }]
}

fn default_s_grid() -> Vec<f64> {
    vec![1e-4, 1e-3, 1e-2, 1e-1, 1.0]
}

impl Default for CompressConfig {
    fn default() -> Self {
        Self {
            methods: default_methods(),
            schemes: default_schemes(),
            s_grid: default_s_grid(),
            mc: None,
        }
    }
}

/// Grid for the spectra and interactions reports.
#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Dimensions to sweep; the dataset's own when empty.
    #[serde(default)]
    pub dims: Vec<usize>,
    /// Gaussian bandwidths in units of `h_S`; the kernel's own when empty.
    #[serde(default)]
    pub h_rel: Vec<f64>,
    /// Keep at most this many singular values per spectrum.
    #[serde(default)]
    pub max_values: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// Rank increases with `h`.
    SmallH,
    /// Rank decreases with `h`.
    LargeH,
}

impl Branch {
    pub fn name(&self) -> &'static str {
        match self {
            Branch::SmallH => "small_h",
            Branch::LargeH => "large_h",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandwidthSearchSpec {
    /// Target rank as a fraction of the source count.
    pub kappa: f64,
    /// Branches to search; both by default.
    #[serde(default = "default_branches")]
    pub branches: Vec<Branch>,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_rank_tolerance")]
    pub rank_tolerance_rows: usize,
    /// Initial bracket in units of `h_S`.
    #[serde(default = "default_bracket")]
    pub bracket: [f64; 2],
    /// Log-spaced profile points across the bracket.
    #[serde(default = "default_profile_points")]
    pub profile_points: usize,
}

fn default_branches() -> Vec<Branch> {
    vec![Branch::SmallH, Branch::LargeH]
}

fn default_max_iters() -> usize {
    40
}

fn default_rank_tolerance() -> usize {
    1
}

fn default_bracket() -> [f64; 2] {
    [1e-3, 1e2]
}

fn default_profile_points() -> usize {
    11
}

impl BandwidthSearchSpec {
    pub fn new(kappa: f64) -> Self {
        Self {
            kappa,
            branches: default_branches(),
            eps: default_eps(),
            max_iters: default_max_iters(),
            rank_tolerance_rows: default_rank_tolerance(),
            bracket: default_bracket(),
            profile_points: default_profile_points(),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa <= 1.0) || self.kappa * (n as f64) < 1.0 {
            return Err(Error::Config(format!(
                "kappa must lie in (0, 1] with kappa * n >= 1, got kappa={}, n={n}",
                self.kappa
            )));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::Config(
                "bandwidth_search.eps must lie in (0, 1)".into(),
            ));
        }
        let [lo, hi] = self.bracket;
        if !(lo > 0.0 && hi > lo) || self.profile_points < 2 {
            return Err(Error::Config(
                "bandwidth bracket must satisfy 0 < lo < hi, with >= 2 profile points".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    IdBound,
    Hmt,
    Projection,
    Uniform,
    UniformReplacement,
    Chernoff,
    Improvement,
    Skeleton,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::IdBound,
        Suite::Hmt,
        Suite::Projection,
        Suite::Uniform,
        Suite::UniformReplacement,
        Suite::Chernoff,
        Suite::Improvement,
        Suite::Skeleton,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::IdBound => "id_bound",
            Suite::Hmt => "hmt",
            Suite::Projection => "projection",
            Suite::Uniform => "uniform",
            Suite::UniformReplacement => "uniform_replacement",
            Suite::Chernoff => "chernoff",
            Suite::Improvement => "improvement",
            Suite::Skeleton => "skeleton",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Suite::ALL.into_iter().find(|s| s.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "default_suites")]
    pub suites: Vec<Suite>,
    #[serde(default = "default_verify_trials")]
    pub trials: usize,
    /// Multiplies every bound; values below 1 are for testing the harness itself.
    #[serde(default = "default_bound_scale")]
    pub bound_scale: f64,
}

fn default_suites() -> Vec<Suite> {
    Suite::ALL.to_vec()
}

fn default_verify_trials() -> usize {
    200
}

fn default_bound_scale() -> f64 {
    1.0
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            suites: default_suites(),
            trials: default_verify_trials(),
            bound_scale: default_bound_scale(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Configuration with only defaults, as used by `verify` without a file.
    pub fn empty() -> Self {
        Self::from_toml("").expect("defaults are valid")
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if let Some(ds) = &self.dataset {
            ds.validate()?;
        }
        if let Some(split) = &self.split {
            if split.n == 0 || !(split.xi >= 0.0) {
                return Err(Error::Config("split needs n >= 1 and xi >= 0".into()));
            }
        }
        if !(self.rank.eps > 0.0 && self.rank.eps < 1.0) {
            return Err(Error::Config(format!(
                "rank.eps must lie in (0, 1), got {}",
                self.rank.eps
            )));
        }
        let c = &self.compress;
        if c.s_grid.is_empty() || c.s_grid.iter().any(|&s| !(s > 0.0 && s <= 1.0)) {
            return Err(Error::Config(
                "compress.s_grid values must lie in (0, 1]".into(),
            ));
        }
        if c.methods.is_empty() || c.schemes.is_empty() {
            return Err(Error::Config(
                "compress needs at least one method and one scheme".into(),
            ));
        }
        if let Some(mc) = c.mc {
            if !(mc.s_mc > 0.0 && mc.s_mc <= 1.0) || mc.n_mc == 0 {
                return Err(Error::Config(
                    "compress.mc needs s_mc in (0, 1] and n_mc >= 1".into(),
                ));
            }
        }
        if let Some(SamplingScheme::Leverage { rank: Some(0) }) = c
            .schemes
            .iter()
            .find(|s| matches!(s, SamplingScheme::Leverage { rank: Some(0) }))
        {
            return Err(Error::Config("leverage rank must be at least 1".into()));
        }
        if self.sweep.h_rel.iter().any(|&h| !(h > 0.0)) || self.sweep.dims.contains(&0) {
            return Err(Error::Config("sweep values must be positive".into()));
        }
        if self.verify.trials == 0 {
            return Err(Error::Config("verify.trials must be at least 1".into()));
        }
        Ok(())
    }

    pub fn dataset(&self) -> Result<&DatasetConfig> {
        self.dataset
            .as_ref()
            .ok_or_else(|| Error::Config("missing [dataset] section".into()))
    }

    pub fn split(&self) -> Result<&SplitConfig> {
        self.split
            .as_ref()
            .ok_or_else(|| Error::Config("missing [split] section".into()))
    }

    pub fn kernel(&self) -> Result<&KernelConfig> {
        self.kernel
            .as_ref()
            .ok_or_else(|| Error::Config("missing [kernel] section".into()))
    }

    pub fn bandwidth_search(&self) -> Result<&BandwidthSearchSpec> {
        self.bandwidth_search
            .as_ref()
            .ok_or_else(|| Error::Config("missing [bandwidth_search] section".into()))
    }
}
