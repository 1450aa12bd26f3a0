//! Source/target partitioning around a center point.

use crate::datagen::PointSet;
use crate::error::{Error, Result};

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Indices of `ps` sorted by distance to `center`, ties broken by index.
pub(crate) fn order_by_distance(ps: &PointSet, center: &[f64]) -> (Vec<usize>, Vec<f64>) {
    let dist: Vec<f64> = ps.iter().map(|p| distance(p, center)).collect();
    let mut order: Vec<usize> = (0..ps.len()).collect();
    order.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)));
    (order, dist)
}

/// Sources are the `n` points closest to the center; targets are the
/// remaining points at distance at least `xi * rho`.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceTargetSplit {
    pub center: Vec<f64>,
    /// Point indices of the sources, nearest first.
    pub source_indices: Vec<usize>,
    /// Point indices of the targets, ascending. Row `i` of an interaction
    /// matrix corresponds to `target_indices[i]`.
    pub target_indices: Vec<usize>,
    /// Distance from the center to each target, aligned with `target_indices`.
    pub target_distances: Vec<f64>,
    /// Largest center-to-source distance.
    pub rho: f64,
    pub xi: f64,
}

impl SourceTargetSplit {
    pub fn n(&self) -> usize {
        self.source_indices.len()
    }

    pub fn m(&self) -> usize {
        self.target_indices.len()
    }

    pub fn sources(&self, ps: &PointSet) -> Result<PointSet> {
        ps.select(&self.source_indices)
    }

    pub fn targets(&self, ps: &PointSet) -> Result<PointSet> {
        ps.select(&self.target_indices)
    }

    /// Target rows ordered by distance to the center, ties by point index.
    pub fn target_rows_by_distance(&self) -> Vec<usize> {
        let mut rows: Vec<usize> = (0..self.m()).collect();
        rows.sort_by(|&a, &b| {
            self.target_distances[a]
                .total_cmp(&self.target_distances[b])
                .then(self.target_indices[a].cmp(&self.target_indices[b]))
        });
        rows
    }
}

pub fn split_sources_targets(
    ps: &PointSet,
    center: &[f64],
    n: usize,
    xi: f64,
) -> Result<SourceTargetSplit> {
    if center.len() != ps.dim() {
        return Err(Error::DimensionMismatch {
            expected: ps.dim(),
            found: center.len(),
        });
    }
    if n == 0 || n >= ps.len() {
        return Err(Error::invalid(format!(
            "need 1 <= n < N for the source count, got n={n}, N={}",
            ps.len()
        )));
    }
    if !(xi >= 0.0 && xi.is_finite()) {
        return Err(Error::invalid(format!(
            "separation xi must be >= 0, got {xi}"
        )));
    }
    let (order, dist) = order_by_distance(ps, center);
    let source_indices = order[..n].to_vec();
    let rho = dist[order[n - 1]];
    let threshold = xi * rho;

    let mut is_source = vec![false; ps.len()];
    for &i in &source_indices {
        is_source[i] = true;
    }
    let (target_indices, target_distances): (Vec<usize>, Vec<f64>) = (0..ps.len())
        .filter(|&i| !is_source[i] && dist[i] >= threshold)
        .map(|i| (i, dist[i]))
        .unzip();
    if target_indices.is_empty() {
        return Err(Error::NoTargets { threshold });
    }
    Ok(SourceTargetSplit {
        center: center.to_vec(),
        source_indices,
        target_indices,
        target_distances,
        rho,
        xi,
    })
}

/// Point indices of the `k` targets closest to the center, nearest first.
///
/// Distance is measured to the center rather than to the nearest source;
/// the two differ by at most `rho`.
pub fn nearest_targets(split: &SourceTargetSplit, k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > split.m() {
        return Err(Error::OutOfRange {
            index: k,
            len: split.m(),
        });
    }
    Ok(split.target_rows_by_distance()[..k]
        .iter()
        .map(|&row| split.target_indices[row])
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceHistogram {
    /// `bins + 1` equally spaced edges spanning `[min, max]`.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub mean: f64,
    pub std_dev: f64,
}

impl DistanceHistogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn coefficient_of_variation(&self) -> f64 {
        self.std_dev / self.mean
    }
}

/// Histogram of all target-source distances.
pub fn pairwise_distance_histogram(
    split: &SourceTargetSplit,
    ps: &PointSet,
    bins: usize,
) -> Result<DistanceHistogram> {
    if bins == 0 {
        return Err(Error::invalid("histogram needs at least one bin"));
    }
    let mut dists = Vec::with_capacity(split.m() * split.n());
    for &t in &split.target_indices {
        let y = ps.point(t);
        for &s in &split.source_indices {
            dists.push(distance(y, ps.point(s)));
        }
    }
    let lo = dists.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = dists.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let edges = (0..=bins)
        .map(|b| if b == bins { hi } else { lo + width * b as f64 })
        .collect();
    let mut counts = vec![0u64; bins];
    for &d in &dists {
        let b = if width > 0.0 {
            (((d - lo) / width) as usize).min(bins - 1)
        } else {
            0
        };
        counts[b] += 1;
    }
    let n = dists.len() as f64;
    let mean = dists.iter().sum::<f64>() / n;
    let var = dists.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n;
    Ok(DistanceHistogram {
        edges,
        counts,
        mean,
        std_dev: var.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::gen_normal;

    fn line() -> PointSet {
        let xs = [0.0, 0.1, -0.1, 0.5, -0.5, 2.0, -2.0, 3.0];
        PointSet::new(xs.to_vec(), 1).unwrap()
    }

    #[test]
    fn one_dimensional_split() {
        let s = split_sources_targets(&line(), &[0.0], 3, 2.0).unwrap();
        let mut src = s.source_indices.clone();
        src.sort();
        assert_eq!(src, vec![0, 1, 2]);
        assert_eq!(s.rho, 0.1);
        assert_eq!(s.target_indices, vec![3, 4, 5, 6, 7]);
    }

    #[test]
    fn zero_separation_takes_all_others() {
        let ps = line();
        let s = split_sources_targets(&ps, &[0.0], 3, 0.0).unwrap();
        assert_eq!(s.m(), ps.len() - 3);
    }

    #[test]
    fn no_targets_error() {
        assert!(matches!(
            split_sources_targets(&line(), &[0.0], 3, 100.0),
            Err(Error::NoTargets { .. })
        ));
    }

    #[test]
    fn bad_source_count() {
        assert!(split_sources_targets(&line(), &[0.0], 0, 1.0).is_err());
        assert!(split_sources_targets(&line(), &[0.0], 8, 1.0).is_err());
    }

    #[test]
    fn ties_broken_by_index() {
        let ps = PointSet::new(vec![1.0, -1.0, 1.0, 5.0], 1).unwrap();
        let s = split_sources_targets(&ps, &[0.0], 2, 0.0).unwrap();
        assert_eq!(s.source_indices, vec![0, 1]);
        assert_eq!(s.target_indices, vec![2, 3]);
    }

    #[test]
    fn nearest_targets_examples() {
        let ps = line();
        let s = split_sources_targets(&ps, &[0.0], 3, 2.0).unwrap();
        assert_eq!(nearest_targets(&s, 2).unwrap(), vec![3, 4]);
        assert_eq!(nearest_targets(&s, 5).unwrap(), vec![3, 4, 5, 6, 7]);
        assert!(nearest_targets(&s, 6).is_err());
        assert!(nearest_targets(&s, 0).is_err());
    }

    #[test]
    fn nearest_targets_match_full_scan() {
        let ps = gen_normal(3, 400, 9).unwrap();
        let s = split_sources_targets(&ps, &[0.0; 3], 20, 1.0).unwrap();
        let k = 30;
        let got = nearest_targets(&s, k).unwrap();
        // Repeated linear scans for the next-closest unused target.
        let mut used = vec![false; ps.len()];
        let mut want = Vec::new();
        for _ in 0..k {
            let mut best: Option<(f64, usize)> = None;
            for &t in &s.target_indices {
                if used[t] {
                    continue;
                }
                let d = ps.point(t).iter().map(|x| x * x).sum::<f64>().sqrt();
                if best.is_none_or(|(bd, bi)| d < bd || (d == bd && t < bi)) {
                    best = Some((d, t));
                }
            }
            let (_, t) = best.unwrap();
            used[t] = true;
            want.push(t);
        }
        assert_eq!(got, want);
    }

    #[test]
    fn split_invariants_hold() {
        let ps = gen_normal(4, 2000, 3).unwrap();
        for xi in [0.5, 1.0, 1.5] {
            let s = split_sources_targets(&ps, &[0.0; 4], 100, xi).unwrap();
            let norm = |i: usize| ps.point(i).iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(s.source_indices.iter().all(|&i| norm(i) <= s.rho));
            assert!(s.source_indices.iter().any(|&i| norm(i) == s.rho));
            assert!(s.target_indices.iter().all(|&i| norm(i) >= xi * s.rho));
            assert!(s
                .target_indices
                .iter()
                .all(|i| !s.source_indices.contains(i)));
            assert_eq!(s, split_sources_targets(&ps, &[0.0; 4], 100, xi).unwrap());
        }
    }

    #[test]
    fn histogram_single_pair() {
        let ps = PointSet::new(vec![0.0, 3.0], 1).unwrap();
        let s = split_sources_targets(&ps, &[0.0], 1, 1.0).unwrap();
        let h = pairwise_distance_histogram(&s, &ps, 4).unwrap();
        assert_eq!(h.total(), 1);
        assert_eq!(h.edges.len(), 5);
    }

    #[test]
    fn histogram_conserves_pairs() {
        let ps = gen_normal(2, 500, 4).unwrap();
        let s = split_sources_targets(&ps, &[0.0; 2], 25, 1.0).unwrap();
        let h = pairwise_distance_histogram(&s, &ps, 17).unwrap();
        assert_eq!(h.total(), (s.m() * s.n()) as u64);
        assert!(pairwise_distance_histogram(&s, &ps, 0).is_err());
    }

    #[test]
    fn distances_concentrate_with_dimension() {
        let mut cvs = Vec::new();
        for d in [2, 8, 32] {
            let ps = gen_normal(d, 20_000, 100 + d as u64).unwrap();
            let s = split_sources_targets(&ps, &vec![0.0; d], 100, 1.0).unwrap();
            let h = pairwise_distance_histogram(&s, &ps, 50).unwrap();
            cvs.push(h.coefficient_of_variation());
        }
        assert!(cvs[0] > cvs[1] && cvs[1] > cvs[2], "{cvs:?}");
    }

    #[test]
    fn excluded_shell_grows_quickly_with_xi() {
        // Raising xi from 1 to 1.2 drops more non-source points than there are sources.
        let (n_points, n) = (100_000, 500);
        let ps = gen_normal(8, n_points, 77).unwrap();
        let excluded =
            |xi| n_points - n - split_sources_targets(&ps, &[0.0; 8], n, xi).unwrap().m();
        let (e1, e12) = (excluded(1.0), excluded(1.2));
        assert_eq!(e1, 0);
        assert!(e12 > n, "{e12}");
    }
}
