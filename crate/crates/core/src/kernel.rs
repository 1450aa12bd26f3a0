//! Kernel functions, bandwidth selection and dense interaction matrices.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::datagen::PointSet;
use crate::error::{Error, Result};

/// A kernel family together with its parameters.
///
/// All three families are symmetric in their two arguments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum KernelSpec {
    /// `exp(-|x - y|^2 / (2 h^2))`, unnormalized.
    Gaussian { h: f64 },
    /// Fundamental solution of the Laplacian: `log r` for d = 2, `r^(2-d)` otherwise.
    ///
    /// For d = 1 this is `r` itself; only d >= 2 is physically meaningful.
    Laplace,
    /// `(x.y / h + c)^p`.
    Polynomial {
        h: f64,
        #[serde(default = "default_offset")]
        c: f64,
        p: u32,
    },
}

fn default_offset() -> f64 {
    1.0
}

impl KernelSpec {
    pub fn gaussian(h: f64) -> Self {
        KernelSpec::Gaussian { h }
    }

    pub fn polynomial(h: f64, c: f64, p: u32) -> Self {
        KernelSpec::Polynomial { h, c, p }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Gaussian { h } if !(h > 0.0 && h.is_finite()) => Err(Error::invalid(
                format!("Gaussian bandwidth must be positive, got {h}"),
            )),
            KernelSpec::Polynomial { h, c, p } => {
                if !(h > 0.0 && h.is_finite()) {
                    Err(Error::invalid(format!(
                        "polynomial scale must be positive, got {h}"
                    )))
                } else if p == 0 {
                    Err(Error::invalid("polynomial degree must be at least 1"))
                } else if !c.is_finite() {
                    Err(Error::invalid("polynomial offset must be finite"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Gaussian { .. } => "gaussian",
            KernelSpec::Laplace => "laplace",
            KernelSpec::Polynomial { .. } => "polynomial",
        }
    }

    /// Bandwidth or scale parameter, if the family has one.
    pub fn bandwidth(&self) -> Option<f64> {
        match *self {
            KernelSpec::Gaussian { h } | KernelSpec::Polynomial { h, .. } => Some(h),
            KernelSpec::Laplace => None,
        }
    }

    /// Evaluate the kernel without checking dimensions.
    #[inline]
    fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        match *self {
            KernelSpec::Gaussian { h } => {
                let r2 = sq_dist(x, y);
                Ok((-r2 / (2.0 * h * h)).exp())
            }
            KernelSpec::Laplace => {
                let r2 = sq_dist(x, y);
                if r2 == 0.0 {
                    return Err(Error::Singularity);
                }
                Ok(laplace_from_sq(r2, x.len()))
            }
            KernelSpec::Polynomial { h, c, p } => {
                let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
                Ok((dot / h + c).powi(p as i32))
            }
        }
    }
}

#[inline]
fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

#[inline]
fn laplace_from_sq(r2: f64, d: usize) -> f64 {
    match d {
        2 => 0.5 * r2.ln(),
        1 => r2.sqrt(),
        3 => 1.0 / r2.sqrt(),
        _ => r2.sqrt().powi(2 - d as i32),
    }
}

/// Evaluate `spec` at the pair `(x, y)`.
pub fn eval_kernel(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    spec.eval_unchecked(x, y)
}

/// Asymptotically optimal KDE bandwidth for standard normal data:
/// `(4 / (2d + 1))^(1/(d+4)) * N^(-1/(d+4))`.
pub fn silverman_bandwidth(d: usize, n: usize) -> f64 {
    let d = d as f64;
    let e = 1.0 / (d + 4.0);
    (4.0 / (2.0 * d + 1.0)).powf(e) * (n as f64).powf(-e)
}

/// Density normalisation `1 / (N h^d (2 pi)^(d/2))` of the Gaussian KDE.
///
/// Only for display: scaling a matrix by a constant changes neither its
/// epsilon-rank nor any relative error.
pub fn gaussian_density_normalizer(h: f64, d: usize, n: usize) -> f64 {
    let d = d as f64;
    1.0 / (n as f64 * h.powf(d) * (2.0 * std::f64::consts::PI).powf(d / 2.0))
}

/// Dense `m x n` matrix of kernel values between targets (rows) and sources (columns).
#[derive(Debug, Clone)]
pub struct InteractionMatrix {
    values: Mat<f64>,
}

impl InteractionMatrix {
    pub fn from_mat(values: Mat<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &Mat<f64> {
        &self.values
    }

    pub fn into_inner(self) -> Mat<f64> {
        self.values
    }

    /// Number of targets.
    pub fn m(&self) -> usize {
        self.values.nrows()
    }

    /// Number of sources.
    pub fn n(&self) -> usize {
        self.values.ncols()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }
}

/// Assemble `K[i, j] = kernel(target_i, source_j)`.
///
/// Fills one source column at a time; the result does not depend on any
/// evaluation order.
pub fn kernel_matrix(
    spec: &KernelSpec,
    targets: &PointSet,
    sources: &PointSet,
) -> Result<InteractionMatrix> {
    spec.validate()?;
    if targets.dim() != sources.dim() {
        return Err(Error::DimensionMismatch {
            expected: targets.dim(),
            found: sources.dim(),
        });
    }
    let (m, n) = (targets.len(), sources.len());
    let mut values = Mat::<f64>::zeros(m, n);
    for j in 0..n {
        let x = sources.point(j);
        let col = values.col_as_slice_mut(j);
        for (i, (out, y)) in col.iter_mut().zip(targets.iter()).enumerate() {
            *out = spec
                .eval_unchecked(y, x)
                .map_err(|_| Error::SingularEntry { row: i, col: j })?;
        }
    }
    Ok(InteractionMatrix { values })
}
