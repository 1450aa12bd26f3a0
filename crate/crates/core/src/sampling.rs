//! Row-sampling schemes for interaction matrices and sample-complexity formulas.

use faer::MatRef;
use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SourceTargetSplit;
use crate::lowrank::row_leverage_scores;
use crate::rng::{seeded, Rng};

/// Distance weighting for [`SamplingScheme::Distance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceWeighting {
    /// Probability proportional to `1 / |y_i - x_c|`: near targets, which
    /// carry the largest rows of a decaying kernel, are favoured.
    #[default]
    Inverse,
    /// Probability proportional to `|y_i - x_c|`.
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SamplingScheme {
    Uniform {
        #[serde(default)]
        replacement: bool,
    },
    /// Each row kept independently with probability `s`.
    Bernoulli,
    /// Probability proportional to the Euclidean norm of the row.
    EuclideanNorm {
        #[serde(default)]
        replacement: bool,
    },
    Distance {
        #[serde(default)]
        weighting: DistanceWeighting,
    },
    /// Probability proportional to the rank-`rank` row leverage score. With
    /// `rank` unset the caller's rank (see [`SamplingContext::rank`]) is used.
    Leverage {
        #[serde(default)]
        rank: Option<usize>,
    },
    /// The `ceil(s m)` targets closest to the center.
    NearestNeighbor,
}

impl SamplingScheme {
    pub fn name(&self) -> &'static str {
        match self {
            SamplingScheme::Uniform { .. } => "uniform",
            SamplingScheme::Bernoulli => "bernoulli",
            SamplingScheme::EuclideanNorm { .. } => "euclidean_norm",
            SamplingScheme::Distance { .. } => "distance",
            SamplingScheme::Leverage { .. } => "leverage",
            SamplingScheme::NearestNeighbor => "nearest_neighbor",
        }
    }

    /// Name with enough parameters to replay a run, e.g. `uniform+replacement`.
    pub fn label(&self) -> String {
        match *self {
            SamplingScheme::Uniform { replacement: true }
            | SamplingScheme::EuclideanNorm { replacement: true } => {
                format!("{}+replacement", self.name())
            }
            SamplingScheme::Distance {
                weighting: DistanceWeighting::Direct,
            } => "distance+direct".to_string(),
            SamplingScheme::Leverage { rank: Some(r) } => format!("leverage+r{r}"),
            _ => self.name().to_string(),
        }
    }

    pub fn with_replacement(&self) -> bool {
        matches!(
            self,
            SamplingScheme::Uniform { replacement: true }
                | SamplingScheme::EuclideanNorm { replacement: true }
        )
    }
}

/// What a scheme may look at. Only `m` is always required.
#[derive(Debug, Clone, Copy, Default)]
pub struct SamplingContext<'a> {
    pub m: usize,
    /// The full `m x n` interaction matrix (norm and leverage schemes).
    pub matrix: Option<MatRef<'a, f64>>,
    /// Geometry whose targets index the rows (distance and nearest-neighbor schemes).
    pub split: Option<&'a SourceTargetSplit>,
    /// Default rank for the leverage scheme.
    pub rank: Option<usize>,
    /// Precomputed row leverage scores; used instead of `matrix` when present.
    pub leverage: Option<&'a [f64]>,
}

impl<'a> SamplingContext<'a> {
    pub fn new(m: usize) -> Self {
        Self {
            m,
            ..Self::default()
        }
    }

    pub fn with_matrix(mut self, k: MatRef<'a, f64>) -> Self {
        self.matrix = Some(k);
        self
    }

    pub fn with_split(mut self, split: &'a SourceTargetSplit) -> Self {
        self.split = Some(split);
        self
    }

    pub fn with_rank(mut self, r: usize) -> Self {
        self.rank = Some(r);
        self
    }

    pub fn with_leverage(mut self, scores: &'a [f64]) -> Self {
        self.leverage = Some(scores);
        self
    }

    fn matrix(&self, scheme: &'static str) -> Result<MatRef<'a, f64>> {
        self.matrix.ok_or(Error::MissingContext {
            scheme,
            what: "the interaction matrix",
        })
    }

    fn split(&self, scheme: &'static str) -> Result<&'a SourceTargetSplit> {
        self.split.ok_or(Error::MissingContext {
            scheme,
            what: "a source/target split",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowSample {
    /// Ascending row indices, except for the nearest-neighbor scheme which
    /// lists rows nearest first.
    pub indices: Vec<usize>,
    pub fraction: f64,
    pub seed: u64,
}

impl RowSample {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// True when the sample is exactly the rows `0..m`, each once.
    pub fn is_all_rows(&self, m: usize) -> bool {
        if self.indices.len() != m {
            return false;
        }
        let mut seen = vec![false; m];
        self.indices
            .iter()
            .all(|&i| i < m && !std::mem::replace(&mut seen[i], true))
    }

    pub fn has_duplicates(&self) -> bool {
        let mut v = self.indices.clone();
        v.sort_unstable();
        v.windows(2).any(|w| w[0] == w[1])
    }
}

/// `m_s = ceil(s m)`, at least one row.
pub fn sample_count(s: f64, m: usize) -> usize {
    ((s * m as f64).ceil() as usize).clamp(1, m)
}

pub fn sample_rows(
    scheme: &SamplingScheme,
    ctx: &SamplingContext<'_>,
    s: f64,
    seed: u64,
) -> Result<RowSample> {
    let m = ctx.m;
    if m == 0 {
        return Err(Error::invalid("cannot sample from zero rows"));
    }
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::invalid(format!(
            "sampling fraction must lie in (0, 1], got {s}"
        )));
    }
    if let Some(k) = ctx.matrix {
        if k.nrows() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: k.nrows(),
            });
        }
    }
    if let Some(split) = ctx.split {
        if split.m() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: split.m(),
            });
        }
    }
    let count = sample_count(s, m);
    let mut rng = seeded(seed);
    let mut indices = match *scheme {
        SamplingScheme::Uniform { replacement: false } => {
            index::sample(&mut rng, m, count).into_vec()
        }
        SamplingScheme::Uniform { replacement: true } => {
            (0..count).map(|_| rng.random_range(0..m)).collect()
        }
        SamplingScheme::Bernoulli => (0..m).filter(|_| rng.random_bool(s)).collect(),
        SamplingScheme::EuclideanNorm { replacement } => {
            let k = ctx.matrix("euclidean_norm")?;
            let weights: Vec<f64> = (0..m)
                .map(|i| {
                    (0..k.ncols())
                        .map(|j| k[(i, j)] * k[(i, j)])
                        .sum::<f64>()
                        .sqrt()
                })
                .collect();
            weighted(&weights, count, replacement, &mut rng)?
        }
        SamplingScheme::Distance { weighting } => {
            let split = ctx.split("distance")?;
            let weights = distance_weights(&split.target_distances, weighting)?;
            weighted(&weights, count, false, &mut rng)?
        }
        SamplingScheme::Leverage { rank } => {
            let owned;
            let scores = match ctx.leverage {
                Some(l) => l,
                None => {
                    let k = ctx.matrix("leverage")?;
                    let r = rank.or(ctx.rank).ok_or(Error::MissingContext {
                        scheme: "leverage",
                        what: "a rank",
                    })?;
                    owned = row_leverage_scores(k, r)?.scores;
                    &owned
                }
            };
            if scores.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    found: scores.len(),
                });
            }
            weighted(scores, count, false, &mut rng)?
        }
        SamplingScheme::NearestNeighbor => {
            let split = ctx.split("nearest_neighbor")?;
            let mut rows = split.target_rows_by_distance();
            rows.truncate(count);
            return Ok(RowSample {
                indices: rows,
                fraction: s,
                seed,
            });
        }
    };
    indices.sort_unstable();
    Ok(RowSample {
        indices,
        fraction: s,
        seed,
    })
}

fn distance_weights(distances: &[f64], weighting: DistanceWeighting) -> Result<Vec<f64>> {
    match weighting {
        DistanceWeighting::Direct => Ok(distances.to_vec()),
        DistanceWeighting::Inverse => distances
            .iter()
            .map(|&d| {
                if d > 0.0 {
                    Ok(1.0 / d)
                } else {
                    Err(Error::invalid(
                        "target at the center: inverse distance weight is infinite",
                    ))
                }
            })
            .collect(),
    }
}

/// Weighted draws. Without replacement, each draw is taken from the
/// remaining rows with renormalized probabilities; once every row of
/// positive weight is used, the rest are drawn uniformly from the
/// zero-weight rows.
fn weighted(weights: &[f64], count: usize, replacement: bool, rng: &mut Rng) -> Result<Vec<usize>> {
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::invalid(
            "sampling weights must be finite and nonnegative",
        ));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroWeight);
    }
    if replacement {
        let mut cdf = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for w in weights {
            acc += w;
            cdf.push(acc);
        }
        return Ok((0..count)
            .map(|_| {
                let u = rng.random::<f64>() * acc;
                let i = cdf.partition_point(|&c| c <= u).min(weights.len() - 1);
                last_positive_at_or_before(weights, i)
            })
            .collect());
    }

    let mut tree = SumTree::new(weights);
    let mut out = Vec::with_capacity(count);
    let mut positive = weights.iter().filter(|&&w| w > 0.0).count();
    while out.len() < count && positive > 0 {
        let u = rng.random::<f64>() * tree.total();
        let i = tree.find(u);
        out.push(i);
        tree.remove(i);
        positive -= 1;
    }
    if out.len() < count {
        let zeros: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] == 0.0).collect();
        let extra = index::sample(rng, zeros.len(), count - out.len());
        out.extend(extra.iter().map(|k| zeros[k]));
    }
    Ok(out)
}

fn last_positive_at_or_before(weights: &[f64], i: usize) -> usize {
    // Rounding can land on a zero-weight row at the top of the CDF.
    (0..=i)
        .rev()
        .find(|&j| weights[j] > 0.0)
        .or_else(|| (i..weights.len()).find(|&j| weights[j] > 0.0))
        .expect("positive total weight")
}

/// Fenwick tree over nonnegative weights with prefix-sum search.
struct SumTree {
    tree: Vec<f64>,
    weights: Vec<f64>,
}

impl SumTree {
    fn new(weights: &[f64]) -> Self {
        let n = weights.len();
        let mut tree = vec![0.0; n + 1];
        for i in 1..=n {
            tree[i] += weights[i - 1];
            let parent = i + (i & i.wrapping_neg());
            if parent <= n {
                tree[parent] += tree[i];
            }
        }
        Self {
            tree,
            weights: weights.to_vec(),
        }
    }

    fn total(&self) -> f64 {
        let mut i = self.weights.len();
        let mut s = 0.0;
        while i > 0 {
            s += self.tree[i];
            i &= i - 1;
        }
        s
    }

    fn remove(&mut self, idx: usize) {
        let w = std::mem::replace(&mut self.weights[idx], 0.0);
        let mut i = idx + 1;
        while i < self.tree.len() {
            self.tree[i] -= w;
            i += i & i.wrapping_neg();
        }
    }

    /// Index `i` with `prefix(i) <= u < prefix(i + 1)`, restricted to rows of
    /// positive weight.
    fn find(&self, u: f64) -> usize {
        let n = self.weights.len();
        let mut pos = 0;
        let mut rem = u;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= rem {
                pos = next;
                rem -= self.tree[next];
            }
            step >>= 1;
        }
        let i = pos.min(n - 1);
        if self.weights[i] > 0.0 {
            i
        } else {
            last_positive_at_or_before(&self.weights, i)
        }
    }
}

/// `ceil(m gamma ln(2r/delta) / ln((1+eps)^(1+eps) / e^eps))`.
pub fn sample_complexity(m: usize, gamma: f64, r: usize, delta: f64, eps: f64) -> Result<usize> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid(format!("eps must lie in (0, 1), got {eps}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    if r == 0 || m == 0 {
        return Err(Error::invalid("sample complexity needs r >= 1 and m >= 1"));
    }
    let lo = r as f64 / m as f64;
    if !(gamma >= lo * (1.0 - 1e-12) && gamma <= 1.0 + 1e-12) {
        return Err(Error::invalid(format!(
            "coherence must lie in [r/m, 1] = [{lo}, 1], got {gamma}"
        )));
    }
    let denom = (1.0 + eps) * (1.0 + eps).ln() - eps;
    let s = m as f64 * gamma * (2.0 * r as f64 / delta).ln() / denom;
    Ok(s.ceil() as usize)
}

/// `sqrt(1 + (m/s)(1+eps)/(1-eps)^2) * sigma_{r+1}`.
pub fn reconstruction_bound(m: usize, s_count: usize, eps: f64, sigma_r1: f64) -> f64 {
    let ratio = m as f64 / s_count as f64;
    (1.0 + ratio * (1.0 + eps) / ((1.0 - eps) * (1.0 - eps))).sqrt() * sigma_r1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::PointSet;
    use crate::geometry::split_sources_targets;
    use faer::Mat;
    use proptest::prelude::*;

    fn line_split() -> SourceTargetSplit {
        let xs = [0.0, 0.1, -0.1, 0.5, -0.5, 2.0, -2.0, 3.0];
        let ps = PointSet::new(xs.to_vec(), 1).unwrap();
        split_sources_targets(&ps, &[0.0], 3, 2.0).unwrap()
    }

    #[test]
    fn uniform_counts() {
        let ctx = SamplingContext::new(10);
        let s = sample_rows(
            &SamplingScheme::Uniform { replacement: false },
            &ctx,
            0.3,
            1,
        )
        .unwrap();
        assert_eq!(s.len(), 3);
        assert!(!s.has_duplicates());
        assert!(s.indices.iter().all(|&i| i < 10));
        let all = sample_rows(
            &SamplingScheme::Uniform { replacement: false },
            &ctx,
            1.0,
            1,
        )
        .unwrap();
        assert_eq!(all.indices, (0..10).collect::<Vec<_>>());
        assert!(all.is_all_rows(10));
    }

    #[test]
    fn tiny_fraction_still_one_row() {
        let ctx = SamplingContext::new(50);
        let s = sample_rows(
            &SamplingScheme::Uniform { replacement: false },
            &ctx,
            1e-6,
            3,
        )
        .unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(sample_count(0.01, 70_001), 701);
    }

    #[test]
    fn invalid_fraction() {
        let ctx = SamplingContext::new(5);
        for s in [0.0, -0.1, 1.5, f64::NAN] {
            assert!(sample_rows(&SamplingScheme::Bernoulli, &ctx, s, 0).is_err());
        }
    }

    #[test]
    fn deterministic() {
        let k = Mat::from_fn(40, 3, |i, j| ((i * 3 + j) % 7) as f64 + 0.5);
        let ctx = SamplingContext::new(40)
            .with_matrix(k.as_ref())
            .with_rank(2);
        for scheme in [
            SamplingScheme::Uniform { replacement: false },
            SamplingScheme::Uniform { replacement: true },
            SamplingScheme::Bernoulli,
            SamplingScheme::EuclideanNorm { replacement: false },
            SamplingScheme::Leverage { rank: None },
        ] {
            let a = sample_rows(&scheme, &ctx, 0.25, 17).unwrap();
            let b = sample_rows(&scheme, &ctx, 0.25, 17).unwrap();
            assert_eq!(a, b, "{}", scheme.label());
        }
    }

    #[test]
    fn nearest_neighbor_on_line() {
        let split = line_split();
        let ctx = SamplingContext::new(split.m()).with_split(&split);
        let s = sample_rows(&SamplingScheme::NearestNeighbor, &ctx, 0.4, 0).unwrap();
        let points: Vec<usize> = s.indices.iter().map(|&r| split.target_indices[r]).collect();
        assert_eq!(points, vec![3, 4]);
    }

    #[test]
    fn missing_context() {
        let ctx = SamplingContext::new(5);
        for scheme in [
            SamplingScheme::EuclideanNorm { replacement: false },
            SamplingScheme::Distance {
                weighting: DistanceWeighting::Inverse,
            },
            SamplingScheme::Leverage { rank: Some(1) },
            SamplingScheme::NearestNeighbor,
        ] {
            assert!(matches!(
                sample_rows(&scheme, &ctx, 0.5, 0),
                Err(Error::MissingContext { .. })
            ));
        }
    }

    #[test]
    fn zero_rows_have_zero_weight() {
        let k = Mat::<f64>::zeros(6, 2);
        let ctx = SamplingContext::new(6).with_matrix(k.as_ref());
        assert!(matches!(
            sample_rows(
                &SamplingScheme::EuclideanNorm { replacement: false },
                &ctx,
                0.5,
                0
            ),
            Err(Error::ZeroWeight)
        ));
    }

    #[test]
    fn exhausted_weight_falls_back_to_zero_rows() {
        let mut k = Mat::<f64>::zeros(6, 2);
        k[(4, 1)] = 2.0;
        let ctx = SamplingContext::new(6).with_matrix(k.as_ref());
        let s = sample_rows(
            &SamplingScheme::EuclideanNorm { replacement: false },
            &ctx,
            0.5,
            9,
        )
        .unwrap();
        assert_eq!(s.len(), 3);
        assert!(s.indices.contains(&4));
        assert!(!s.has_duplicates());
    }

    #[test]
    fn dominant_norm_row() {
        let k = Mat::from_fn(100, 4, |i, _| if i == 37 { 1e6 } else { 1e-6 });
        let ctx = SamplingContext::new(100).with_matrix(k.as_ref());
        let hits = (0..1000)
            .filter(|&t| {
                let s = sample_rows(
                    &SamplingScheme::EuclideanNorm { replacement: false },
                    &ctx,
                    0.01,
                    t,
                )
                .unwrap();
                s.indices == vec![37]
            })
            .count();
        assert!(hits >= 999, "{hits}");
    }

    #[test]
    fn weighted_marginals_converge() {
        let w = [1.0, 2.0, 3.0, 4.0, 0.0, 5.0, 1.5, 0.5, 2.0, 1.0];
        let total: f64 = w.iter().sum();
        let trials = 100_000;
        for replacement in [true, false] {
            let mut counts = [0usize; 10];
            let mut rng = seeded(5);
            for _ in 0..trials {
                counts[weighted(&w, 1, replacement, &mut rng).unwrap()[0]] += 1;
            }
            for i in 0..10 {
                let dev = (counts[i] as f64 / trials as f64 - w[i] / total).abs();
                assert!(dev < 0.01, "row {i}: {dev}");
            }
            assert_eq!(counts[4], 0);
        }
    }

    #[test]
    fn sequential_draws_renormalize() {
        // Two draws from weights (3, 1): P(second = 1) = 3/4 * 1 + 1/4 * 0.
        let trials = 40_000;
        let mut rng = seeded(6);
        let mut first_then_second = 0;
        for _ in 0..trials {
            let d = weighted(&[3.0, 1.0, 0.0], 2, false, &mut rng).unwrap();
            assert_ne!(d[0], d[1]);
            if d == [0, 1] {
                first_then_second += 1;
            }
        }
        let p = first_then_second as f64 / trials as f64;
        assert!((p - 0.75).abs() < 0.015, "{p}");
    }

    #[test]
    fn leverage_problem_case() {
        // One row along e1 among many copies of e2: its leverage is 1 of 2.
        let m = 50;
        let k = Mat::from_fn(m, 2, |i, j| match (i, j) {
            (0, 0) => 1.0,
            (0, _) => 0.0,
            (_, 1) => 1.0,
            _ => 0.0,
        });
        let ctx = SamplingContext::new(m).with_matrix(k.as_ref()).with_rank(2);
        let hits = (0..2000)
            .filter(|&t| {
                let s = sample_rows(
                    &SamplingScheme::Leverage { rank: None },
                    &ctx,
                    1.0 / m as f64,
                    t,
                )
                .unwrap();
                s.indices == vec![0]
            })
            .count();
        assert!(hits as f64 / 2000.0 >= 0.5 - 0.035, "{hits}");
    }

    #[test]
    fn distance_weighting_prefers_near_rows() {
        let ps = crate::datagen::gen_normal(2, 3000, 4).unwrap();
        let split = split_sources_targets(&ps, &[0.0, 0.0], 30, 1.0).unwrap();
        let ctx = SamplingContext::new(split.m()).with_split(&split);
        let mean_dist = |w| {
            let s = sample_rows(&SamplingScheme::Distance { weighting: w }, &ctx, 0.1, 2).unwrap();
            assert!(!s.has_duplicates());
            s.indices
                .iter()
                .map(|&r| split.target_distances[r])
                .sum::<f64>()
                / s.len() as f64
        };
        assert!(mean_dist(DistanceWeighting::Inverse) < mean_dist(DistanceWeighting::Direct));
    }

    #[test]
    fn sample_complexity_examples() {
        let denom = 1.5f64 * 1.5f64.ln() - 0.5;
        assert!((denom - 0.108198).abs() < 1e-6);
        assert!((1.0 / denom - 9.2423).abs() < 1e-4);
        assert_eq!(sample_complexity(1000, 0.01, 10, 0.1, 0.5).unwrap(), 490);
        assert!(sample_complexity(1000, 0.01, 10, 0.1, 1.0).is_err());
        assert!(sample_complexity(1000, 0.01, 10, 0.1, 0.0).is_err());
        assert!(sample_complexity(1000, 0.001, 10, 0.1, 0.5).is_err());
    }

    #[test]
    fn reconstruction_bound_examples() {
        for (m, s) in [(10, 1), (1000, 37), (5, 5)] {
            let want = (1.0 + 6.0 * m as f64 / s as f64).sqrt();
            assert!((reconstruction_bound(m, s, 0.5, 1.0) - want).abs() < 1e-12);
        }
        assert_eq!(reconstruction_bound(100, 3, 0.5, 0.0), 0.0);
        assert!((reconstruction_bound(8, 8, 0.5, 2.0) - 2.0 * 7f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn scheme_config_roundtrip() {
        let s: SamplingScheme = toml::from_str("kind = \"uniform\"\nreplacement = true").unwrap();
        assert_eq!(s, SamplingScheme::Uniform { replacement: true });
        let d: SamplingScheme = toml::from_str("kind = \"distance\"").unwrap();
        assert_eq!(
            d,
            SamplingScheme::Distance {
                weighting: DistanceWeighting::Inverse
            }
        );
        // The replacement flag is meaningless for Bernoulli draws and ignored.
        let b: SamplingScheme = toml::from_str("kind = \"bernoulli\"\nreplacement = true").unwrap();
        assert_eq!(b, SamplingScheme::Bernoulli);
        assert!(toml::from_str::<SamplingScheme>("kind = \"uniform\"\nrank = 3").is_err());
    }

    proptest! {
        #[test]
        fn complexity_monotone_in_gamma(m in 10usize..5000, r in 1usize..10, g1 in 0.0f64..1.0, g2 in 0.0f64..1.0) {
            prop_assume!(r <= m);
            let lo = r as f64 / m as f64;
            let (a, b) = (lo + (1.0 - lo) * g1.min(g2), lo + (1.0 - lo) * g1.max(g2));
            prop_assert!(sample_complexity(m, a, r, 0.1, 0.5).unwrap() <= sample_complexity(m, b, r, 0.1, 0.5).unwrap());
        }

        #[test]
        fn without_replacement_is_distinct(seed in any::<u64>(), m in 1usize..200, s in 0.001f64..1.0) {
            let w: Vec<f64> = (0..m).map(|i| ((i * 37) % 11) as f64).collect();
            let mut rng = seeded(seed);
            let count = sample_count(s, m);
            match weighted(&w, count, false, &mut rng) {
                Ok(mut d) => {
                    prop_assert_eq!(d.len(), count);
                    d.sort_unstable();
                    prop_assert!(d.windows(2).all(|p| p[0] != p[1]));
                    prop_assert!(d.iter().all(|&i| i < m));
                }
                Err(e) => prop_assert!(matches!(e, Error::ZeroWeight)),
            }
        }
    }
}
