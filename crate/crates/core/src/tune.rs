//! Pre-clustering hyperparameter estimation: row subsets, k-distance knee,
//! and silhouette sweeps over ε (DBSCAN) and k (k-means).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{dbscan::dbscan_labels, kmeans};
use crate::distance::euclidean;
use crate::error::{Error, Result};
use crate::frame::SensorFrame;
use crate::labels::NOISE;
use crate::matrix::Matrix;
use crate::neighbors::KdTree;
use crate::seed::RunSeed;

pub const MIN_SUBSET_ROWS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TuneParams {
    pub subset_fractions: Vec<f64>,
    /// Neighbours averaged per point in the k-distance curve.
    pub kdist_k: usize,
    pub eps_grid: Vec<f64>,
    pub k_grid: Vec<usize>,
    pub min_pts: usize,
}

impl Default for TuneParams {
    fn default() -> Self {
        Self {
            subset_fractions: vec![0.10, 0.20, 0.30],
            kdist_k: 4,
            eps_grid: (1..=20).map(|i| i as f64 / 10.0).collect(),
            k_grid: (2..=12).collect(),
            min_pts: 5,
        }
    }
}

impl TuneParams {
    pub fn validate(&self) -> Result<()> {
        if self.subset_fractions.is_empty() || self.subset_fractions.iter().any(|&f| !(f > 0.0 && f <= 1.0)) {
            return Err(Error::Parameter("subset_fractions must be non-empty and lie in (0, 1]".into()));
        }
        if self.kdist_k == 0 {
            return Err(Error::Parameter("kdist_k must be at least 1".into()));
        }
        if self.eps_grid.is_empty() || self.eps_grid.iter().any(|&e| !(e > 0.0)) {
            return Err(Error::Parameter("eps_grid must be non-empty and positive".into()));
        }
        if self.k_grid.is_empty() || self.k_grid.iter().any(|&k| k < 2) {
            return Err(Error::Parameter("k_grid must be non-empty with k >= 2".into()));
        }
        if self.min_pts == 0 {
            return Err(Error::Parameter("min_pts must be at least 1".into()));
        }
        Ok(())
    }
}

/// Uniform row samples without replacement, one per fraction, each kept in
/// time order. Sample `i` uses its own sub-seed.
pub fn sample_subsets(frame: &SensorFrame, fractions: &[f64], seed: RunSeed) -> Result<Vec<SensorFrame>> {
    let n = frame.n_rows();
    fractions
        .iter()
        .enumerate()
        .map(|(i, &f)| {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Parameter(format!("subset fraction {f} outside (0, 1]")));
            }
            let m = (f * n as f64).round() as usize;
            if m < MIN_SUBSET_ROWS {
                return Err(Error::InsufficientData(format!(
                    "fraction {f} of {n} rows leaves {m} rows (< {MIN_SUBSET_ROWS})"
                )));
            }
            if m == n {
                return Ok(frame.clone());
            }
            let mut rng = seed.rng_for("tune.subset", i as u64);
            let mut rows = rand::seq::index::sample(&mut rng, n, m).into_vec();
            rows.sort_unstable();
            Ok(frame.select_rows(&rows))
        })
        .collect()
}

/// Mean distance from each point to its `k` nearest other points, sorted
/// ascending.
pub fn kdistance_curve(x: &Matrix, k: usize) -> Result<Vec<f64>> {
    let n = x.rows();
    if k == 0 || k >= n {
        return Err(Error::Parameter(format!("k-distance needs 1 <= k < n (k = {k}, n = {n})")));
    }
    let tree = KdTree::new(x);
    let mut curve: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| tree.knn(x.row(i), k, Some(i)).iter().map(|nb| nb.distance).sum::<f64>() / k as f64)
        .collect();
    curve.sort_by(f64::total_cmp);
    Ok(curve)
}

/// Point of maximum deviation below the chord joining the first and last
/// points of the curve, after scaling both axes to [0, 1].
pub fn detect_knee(curve: &[f64]) -> Result<(usize, f64)> {
    let n = curve.len();
    if n < 3 {
        return Err(Error::NoKnee(format!("curve has {n} points, need at least 3")));
    }
    if curve.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Parameter("k-distance curve must be non-decreasing".into()));
    }
    let (lo, hi) = (curve[0], curve[n - 1]);
    let range = hi - lo;
    if !(range > 0.0) {
        return Err(Error::NoKnee("flat curve".into()));
    }
    let mut best = (0, f64::NEG_INFINITY);
    for (i, &c) in curve.iter().enumerate() {
        let x = i as f64 / (n - 1) as f64;
        let y = (c - lo) / range;
        let dev = (x - y) / std::f64::consts::SQRT_2;
        if dev > best.1 {
            best = (i, dev);
        }
    }
    if best.1 < 1e-9 {
        return Err(Error::NoKnee("no point lies below the chord".into()));
    }
    Ok((best.0, curve[best.0]))
}

/// Pairwise distance source for silhouette computation.
pub trait Distances: Sync {
    fn len(&self) -> usize;
    fn dist(&self, i: usize, j: usize) -> f64;
    /// Calls `f(j, d(i, j))` for every `j != i`.
    fn row(&self, i: usize, f: &mut dyn FnMut(usize, f64)) {
        for j in 0..self.len() {
            if j != i {
                f(j, self.dist(i, j));
            }
        }
    }
}

impl Distances for Matrix {
    fn len(&self) -> usize {
        self.rows()
    }
    fn dist(&self, i: usize, j: usize) -> f64 {
        euclidean(self.row(i), self.row(j))
    }
}

/// Condensed upper-triangular distance matrix.
pub struct DistanceCache {
    n: usize,
    d: Vec<f64>,
}

impl DistanceCache {
    pub fn new(x: &Matrix) -> Self {
        let n = x.rows();
        let d: Vec<f64> = (0..n)
            .into_par_iter()
            .flat_map_iter(|i| (i + 1..n).map(move |j| euclidean(x.row(i), x.row(j))))
            .collect();
        Self { n, d }
    }

    #[inline]
    fn offset(&self, i: usize) -> usize {
        // Start of row i in the condensed layout.
        i * self.n - i * (i + 1) / 2
    }
}

impl Distances for DistanceCache {
    fn len(&self) -> usize {
        self.n
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.d[self.offset(a) + b - a - 1]
    }

    fn row(&self, i: usize, f: &mut dyn FnMut(usize, f64)) {
        for j in 0..i {
            f(j, self.d[self.offset(j) + i - j - 1]);
        }
        let base = self.offset(i);
        for j in i + 1..self.n {
            f(j, self.d[base + j - i - 1]);
        }
    }
}

/// Mean silhouette over non-noise points; noise rows are ignored entirely.
pub fn silhouette_score(x: &Matrix, labels: &[i32]) -> Result<f64> {
    silhouette_with(x, labels)
}

pub fn silhouette_with<D: Distances + ?Sized>(dist: &D, labels: &[i32]) -> Result<f64> {
    let n = dist.len();
    if labels.len() != n {
        return Err(Error::Dimension {
            expected: n,
            actual: labels.len(),
        });
    }
    let m = labels.iter().copied().max().map_or(0, |v| (v + 1).max(0) as usize);
    let mut sizes = vec![0usize; m];
    for &l in labels.iter().filter(|&&l| l != NOISE) {
        sizes[l as usize] += 1;
    }
    let present = sizes.iter().filter(|&&s| s > 0).count();
    if present < 2 {
        return Err(Error::UndefinedScore(format!("{present} non-noise cluster(s); need at least 2")));
    }
    let members: Vec<usize> = (0..n).filter(|&i| labels[i] != NOISE).collect();
    let total: f64 = members
        .par_iter()
        .map(|&i| {
            let own = labels[i] as usize;
            if sizes[own] == 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; m];
            dist.row(i, &mut |j, d| {
                let l = labels[j];
                if l != NOISE {
                    sums[l as usize] += d;
                }
            });
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..m)
                .filter(|&c| c != own && sizes[c] > 0)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            if denom > 0.0 {
                (b - a) / denom
            } else {
                0.0
            }
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    Ok(total / members.len() as f64)
}

/// Index of the best defined score; ties keep the earlier (smaller) grid value.
fn argmax<T: Copy>(scores: &[(T, Option<f64>)]) -> Option<T> {
    let mut best: Option<(T, f64)> = None;
    for &(v, s) in scores {
        if let Some(s) = s {
            if best.is_none_or(|b| s > b.1) {
                best = Some((v, s));
            }
        }
    }
    best.map(|b| b.0)
}

fn sorted_grid<T: Copy + PartialOrd>(grid: &[T]) -> Vec<T> {
    let mut g = grid.to_vec();
    g.sort_by(|a, b| a.partial_cmp(b).expect("grid values are comparable"));
    g
}

/// DBSCAN silhouette per ε; undefined scores are `None`.
pub fn sweep_epsilon(x: &Matrix, eps_grid: &[f64], min_pts: usize) -> Result<Vec<(f64, Option<f64>)>> {
    let cache = DistanceCache::new(x);
    sweep_epsilon_cached(x, &cache, eps_grid, min_pts)
}

fn sweep_epsilon_cached(x: &Matrix, cache: &DistanceCache, eps_grid: &[f64], min_pts: usize) -> Result<Vec<(f64, Option<f64>)>> {
    sorted_grid(eps_grid)
        .into_par_iter()
        .map(|eps| {
            let labels = dbscan_labels(x, eps, min_pts)?;
            Ok((eps, silhouette_with(cache, &labels).ok()))
        })
        .collect()
}

/// k-means silhouette per k; undefined scores are `None`.
pub fn sweep_k(x: &Matrix, k_grid: &[usize], seed: RunSeed) -> Result<Vec<(usize, Option<f64>)>> {
    let cache = DistanceCache::new(x);
    sweep_k_cached(x, &cache, k_grid, seed)
}

fn sweep_k_cached(x: &Matrix, cache: &DistanceCache, k_grid: &[usize], seed: RunSeed) -> Result<Vec<(usize, Option<f64>)>> {
    sorted_grid(k_grid)
        .into_par_iter()
        .map(|k| {
            if k > x.rows() {
                return Ok((k, None));
            }
            let (_, a) = kmeans(x, k, seed.derive("tune.k", k as u64))?;
            Ok((k, silhouette_with(cache, a.labels()).ok()))
        })
        .collect()
}

pub fn best_epsilon(scores: &[(f64, Option<f64>)]) -> Result<f64> {
    argmax(scores).ok_or_else(|| Error::TuningFailure("silhouette undefined for every ε".into()))
}

pub fn best_k(scores: &[(usize, Option<f64>)]) -> Result<usize> {
    argmax(scores).ok_or_else(|| Error::TuningFailure("silhouette undefined for every k".into()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsetTune {
    pub fraction: f64,
    pub n_rows: usize,
    pub kdist_curve: Vec<f64>,
    /// `None` when the curve has no knee.
    pub knee: Option<(usize, f64)>,
    pub silhouette_vs_epsilon: Vec<(f64, Option<f64>)>,
    pub silhouette_vs_k: Vec<(usize, Option<f64>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub subsets: Vec<SubsetTune>,
    pub chosen_epsilon: f64,
    pub chosen_k: usize,
}

/// Runs the full tuning procedure; the chosen values are the sweep argmaxes
/// on the largest subset.
pub fn tune(x: &SensorFrame, params: &TuneParams, seed: RunSeed) -> Result<TuneResult> {
    params.validate()?;
    let frames = sample_subsets(x, &params.subset_fractions, seed)?;
    let mut subsets = Vec::with_capacity(frames.len());
    for (i, (f, frac)) in frames.iter().zip(&params.subset_fractions).enumerate() {
        let m = f.values();
        let curve = kdistance_curve(m, params.kdist_k.min(m.rows() - 1))?;
        let knee = detect_knee(&curve).ok();
        let cache = DistanceCache::new(m);
        let eps = sweep_epsilon_cached(m, &cache, &params.eps_grid, params.min_pts)?;
        let ks = sweep_k_cached(m, &cache, &params.k_grid, seed.derive("tune.subset", i as u64))?;
        log::info!(
            "subset {frac}: {} rows, knee {:?}, best eps {:?}, best k {:?}",
            m.rows(),
            knee.map(|k| k.1),
            argmax(&eps),
            argmax(&ks)
        );
        subsets.push(SubsetTune {
            fraction: *frac,
            n_rows: m.rows(),
            kdist_curve: curve,
            knee,
            silhouette_vs_epsilon: eps,
            silhouette_vs_k: ks,
        });
    }
    let largest = subsets
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.fraction.total_cmp(&b.1.fraction).then(b.0.cmp(&a.0)))
        .map(|(_, s)| s)
        .expect("at least one subset");
    Ok(TuneResult {
        chosen_epsilon: best_epsilon(&largest.silhouette_vs_epsilon)?,
        chosen_k: best_k(&largest.silhouette_vs_k)?,
        subsets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn knee_hand_example() {
        let (i, e) = detect_knee(&[0.0, 0.05, 0.1, 0.15, 0.9, 1.0]).unwrap();
        assert_eq!((i, e), (3, 0.15));
        assert!(matches!(detect_knee(&[0.0, 1.0, 2.0, 3.0]), Err(Error::NoKnee(_))));
        assert!(matches!(detect_knee(&[2.0; 5]), Err(Error::NoKnee(_))));
    }

    #[test]
    fn collinear_kdistance() {
        let x = Matrix::from_rows(&[[0.0], [2.0], [4.0]]).unwrap();
        assert_eq!(kdistance_curve(&x, 1).unwrap(), vec![2.0, 2.0, 2.0]);
        let dup = Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0], [3.0, 0.0], [3.0, 0.0]]).unwrap();
        assert_eq!(kdistance_curve(&dup, 1).unwrap(), vec![0.0; 4]);
        assert!(kdistance_curve(&x, 3).is_err());
    }

    #[test]
    fn four_point_silhouette() {
        let x = Matrix::from_rows(&[[0.0, 0.0], [0.0, 1.0], [10.0, 10.0], [10.0, 11.0]]).unwrap();
        let s = silhouette_score(&x, &[0, 0, 1, 1]).unwrap();
        assert!((s - 0.9293).abs() < 1e-4, "{s}");
        let cache = DistanceCache::new(&x);
        assert_eq!(silhouette_with(&cache, &[0, 0, 1, 1]).unwrap(), s);
        assert!(silhouette_score(&x, &[0, 0, 0, -1]).is_err());
    }

    #[test]
    fn coincident_clusters_score_one() {
        let x = Matrix::from_rows(&[[0.0], [0.0], [5.0], [5.0]]).unwrap();
        assert_eq!(silhouette_score(&x, &[0, 0, 1, 1]).unwrap(), 1.0);
    }

    #[test]
    fn subset_sizes() {
        let f = SensorFrame::new((0..200).collect(), vec!["a".into()], Matrix::zeros(200, 1)).unwrap();
        let s = sample_subsets(&f, &[0.1, 1.0], RunSeed(4)).unwrap();
        assert_eq!(s[0].n_rows(), 20);
        assert_eq!(s[1], f);
        assert!(s[0].timestamps().windows(2).all(|w| w[0] < w[1]));
        assert!(sample_subsets(&f, &[0.01], RunSeed(4)).is_err());
    }

    #[test]
    fn argmax_ties_prefer_smaller() {
        assert_eq!(argmax(&[(1, Some(0.5)), (2, Some(0.5)), (3, None)]), Some(1));
        assert_eq!(argmax::<usize>(&[(1, None)]), None);
    }
}
