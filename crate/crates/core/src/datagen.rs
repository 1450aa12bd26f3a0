//! Point sets: synthetic generators and text-file ingestion.

use std::fs;
use std::path::Path;

use faer::Mat;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded};

/// `len` points in `dim` dimensions, stored row-major (one point per row).
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    data: Vec<f64>,
    len: usize,
    dim: usize,
}

impl PointSet {
    pub fn new(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("point dimension must be at least 1"));
        }
        if data.is_empty() || data.len() % dim != 0 {
            return Err(Error::invalid(format!(
                "{} coordinates do not form a nonempty set of {dim}-dimensional points",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite coordinate in point {}",
                pos / dim
            )));
        }
        let len = data.len() / dim;
        Ok(Self { data, len, dim })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.len(),
            });
        }
        Self::new(rows.concat(), dim)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    /// Always false; a point set holds at least one point.
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// The points at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<PointSet> {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            if i >= self.len {
                return Err(Error::OutOfRange {
                    index: i,
                    len: self.len,
                });
            }
            data.extend_from_slice(self.point(i));
        }
        PointSet::new(data, self.dim)
    }
}

/// Zero-padded, rotated low-dimensional Gaussian data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowIntrinsicSpec {
    pub intrinsic_dim: usize,
    pub ambient_dim: usize,
    /// Half-width of the i.i.d. uniform noise added to every coordinate.
    pub noise_amplitude: f64,
}

impl LowIntrinsicSpec {
    pub const DEFAULT_NOISE: f64 = 1e-3;

    pub fn new(intrinsic_dim: usize, ambient_dim: usize) -> Self {
        Self {
            intrinsic_dim,
            ambient_dim,
            noise_amplitude: Self::DEFAULT_NOISE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.intrinsic_dim == 0 || self.ambient_dim < self.intrinsic_dim {
            return Err(Error::invalid(format!(
                "need ambient_dim >= intrinsic_dim >= 1, got {} and {}",
                self.ambient_dim, self.intrinsic_dim
            )));
        }
        if !(self.noise_amplitude >= 0.0 && self.noise_amplitude.is_finite()) {
            return Err(Error::invalid(
                "noise amplitude must be finite and nonnegative",
            ));
        }
        Ok(())
    }
}

fn check_counts(d: usize, n: usize) -> Result<()> {
    if d == 0 || n == 0 {
        return Err(Error::invalid(format!(
            "need d >= 1 and N >= 1, got d={d}, N={n}"
        )));
    }
    Ok(())
}

/// `n` i.i.d. standard normal points in `d` dimensions, filled row by row.
pub fn gen_normal(d: usize, n: usize, seed: u64) -> Result<PointSet> {
    check_counts(d, n)?;
    let mut rng = seeded(seed);
    let data: Vec<f64> = (0..n * d)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    PointSet::new(data, d)
}

/// A uniformly distributed random rotation of R^d.
///
/// Orthogonalises a seeded standard-normal matrix by Householder QR and flips
/// column signs so that R has a positive diagonal.
pub fn random_rotation(d: usize, seed: u64) -> Mat<f64> {
    let mut rng = seeded(seed);
    let g = Mat::<f64>::from_fn(d, d, |_, _| StandardNormal.sample(&mut rng));
    let qr = g.qr();
    let mut q = qr.compute_Q();
    let r = qr.R();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            for i in 0..d {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// Standard normal data in `intrinsic_dim` dimensions, zero padded to
/// `ambient_dim`, rotated by [`random_rotation`] and perturbed with uniform noise.
///
/// Sub-streams of `seed`: 0 for the normal draw, 1 for the rotation, 2 for noise.
pub fn gen_low_intrinsic(spec: &LowIntrinsicSpec, n: usize, seed: u64) -> Result<PointSet> {
    spec.validate()?;
    check_counts(spec.ambient_dim, n)?;
    let (di, de) = (spec.intrinsic_dim, spec.ambient_dim);
    let latent = gen_normal(di, n, derive_seed(seed, &[0]))?;
    let rot = random_rotation(de, derive_seed(seed, &[1]));

    let mut data = vec![0.0; n * de];
    for (z, out) in latent.iter().zip(data.chunks_exact_mut(de)) {
        // Only the first `di` columns of the rotation see the padded point.
        for (l, &zl) in z.iter().enumerate() {
            let col = rot.col_as_slice(l);
            for (o, &q) in out.iter_mut().zip(col) {
                *o += q * zl;
            }
        }
    }
    if spec.noise_amplitude > 0.0 {
        let a = spec.noise_amplitude;
        let noise = Uniform::new_inclusive(-a, a).map_err(|e| Error::invalid(e.to_string()))?;
        let mut rng = seeded(derive_seed(seed, &[2]));
        for x in &mut data {
            *x += rng.sample(noise);
        }
    }
    PointSet::new(data, de)
}

/// Parse delimited point text: one point per line, comma and/or whitespace
/// separated, `#` comment lines and blank lines skipped.
pub fn parse_points(text: &str, origin: &Path) -> Result<PointSet> {
    let mut data = Vec::new();
    let mut dim: Option<usize> = None;
    for (lineno, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())) {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut width = 0;
        for field in line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
        {
            let value: f64 = field.parse().map_err(|_| Error::Parse {
                path: origin.to_path_buf(),
                line: lineno,
                message: format!("cannot parse `{field}` as a number"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    path: origin.to_path_buf(),
                    line: lineno,
                    message: format!("non-finite value `{field}`"),
                });
            }
            data.push(value);
            width += 1;
        }
        match dim {
            None => dim = Some(width),
            Some(d) if d != width => {
                return Err(Error::InconsistentWidth {
                    path: origin.to_path_buf(),
                    line: lineno,
                    expected: d,
                    found: width,
                })
            }
            Some(_) => {}
        }
    }
    match dim {
        Some(d) if d > 0 => PointSet::new(data, d),
        _ => Err(Error::EmptyInput {
            path: origin.to_path_buf(),
        }),
    }
}

pub fn load_points(path: impl AsRef<Path>) -> Result<PointSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_points(&text, path)
}

/// Per-coordinate affine map onto [0, 1]; constant coordinates map to 0.
pub fn rescale_unit_hypercube(ps: &PointSet) -> PointSet {
    let d = ps.dim();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for p in ps.iter() {
        for k in 0..d {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let data = ps
        .iter()
        .flat_map(|p| {
            p.iter().enumerate().map(|(k, &x)| {
                let span = hi[k] - lo[k];
                if span > 0.0 {
                    ((x - lo[k]) / span).clamp(0.0, 1.0)
                } else {
                    0.0
                }
            })
        })
        .collect();
    PointSet::new(data, d).expect("rescaling preserves shape and finiteness")
}
