use std::collections::BTreeMap;
use std::time::Instant;

use rand::Rng;

use crate::distance::squared_euclidean;
use crate::error::{Error, Result};
use crate::labels::{Algorithm, ClusterAssignment};
use crate::matrix::Matrix;
use crate::seed::RunSeed;

pub const MAX_ITER: usize = 300;
pub const TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansModel {
    pub centroids: Matrix,
    pub inertia: f64,
    pub iterations: usize,
    /// Inertia after every assignment step, final assignment included.
    pub inertia_history: Vec<f64>,
}

impl KMeansModel {
    /// Nearest centroid per row; ties go to the lowest centroid index.
    pub fn predict(&self, x: &Matrix) -> Vec<usize> {
        (0..x.rows()).map(|i| nearest(&self.centroids, x.row(i)).0).collect()
    }
}

fn nearest(centroids: &Matrix, p: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centroids.rows() {
        let d = squared_euclidean(p, centroids.row(c));
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Lloyd's algorithm with k-means++ seeding.
pub fn kmeans(x: &Matrix, k: usize, seed: RunSeed) -> Result<(KMeansModel, ClusterAssignment)> {
    let start = Instant::now();
    let weights = vec![1.0; x.rows()];
    let (model, labels) = kmeans_weighted(x, &weights, k, seed)?;
    let params = BTreeMap::from([("k".to_string(), k as f64)]);
    let labels = labels.into_iter().map(|l| l as i32).collect();
    let a = ClusterAssignment::new(Algorithm::KMeans, labels, params)?.with_fit_seconds(start.elapsed().as_secs_f64());
    Ok((model, a))
}

/// Weighted k-means: every row counts `weights[i]` times in the objective.
/// With unit weights this is exactly [`kmeans`] for the same seed.
pub fn kmeans_weighted(x: &Matrix, weights: &[f64], k: usize, seed: RunSeed) -> Result<(KMeansModel, Vec<usize>)> {
    let n = x.rows();
    if k == 0 || k > n {
        return Err(Error::Parameter(format!("k-means needs 1 <= k <= n (k = {k}, n = {n})")));
    }
    if weights.len() != n {
        return Err(Error::Dimension {
            expected: n,
            actual: weights.len(),
        });
    }
    let mut rng = seed.rng_for("kmeans", 0);
    let mut centroids = plus_plus_init(x, weights, k, &mut rng);
    let d = x.cols();
    let mut labels = vec![0usize; n];
    let mut dist = vec![0.0; n];
    let mut history = Vec::new();
    let mut iterations = 0;

    let assign = |centroids: &Matrix, labels: &mut [usize], dist: &mut [f64]| -> f64 {
        let mut inertia = 0.0;
        for i in 0..n {
            let (c, dd) = nearest(centroids, x.row(i));
            labels[i] = c;
            dist[i] = dd;
            inertia += weights[i] * dd;
        }
        inertia
    };

    for _ in 0..MAX_ITER {
        iterations += 1;
        history.push(assign(&centroids, &mut labels, &mut dist));
        let mut sums = Matrix::zeros(k, d);
        let mut mass = vec![0.0; k];
        for i in 0..n {
            let w = weights[i];
            mass[labels[i]] += w;
            for (s, v) in sums.row_mut(labels[i]).iter_mut().zip(x.row(i)) {
                *s += w * v;
            }
        }
        let mut next = centroids.clone();
        let mut taken = vec![false; n];
        for c in 0..k {
            if mass[c] > 0.0 {
                for (dst, s) in next.row_mut(c).iter_mut().zip(sums.row(c)) {
                    *dst = s / mass[c];
                }
            } else {
                // Empty cluster: move it onto the point worst served by the
                // current assignment.
                let far = (0..n)
                    .filter(|&i| !taken[i])
                    .fold(None::<usize>, |best, i| match best {
                        Some(b) if dist[b] >= dist[i] => Some(b),
                        _ => Some(i),
                    })
                    .expect("k <= n leaves an untaken point");
                taken[far] = true;
                dist[far] = 0.0;
                next.row_mut(c).copy_from_slice(x.row(far));
            }
        }
        let shift = (0..k)
            .map(|c| squared_euclidean(centroids.row(c), next.row(c)))
            .fold(0.0, f64::max)
            .sqrt();
        centroids = next;
        if shift < TOLERANCE {
            break;
        }
    }
    let inertia = assign(&centroids, &mut labels, &mut dist);
    history.push(inertia);
    Ok((
        KMeansModel {
            centroids,
            inertia,
            iterations,
            inertia_history: history,
        },
        labels,
    ))
}

/// Greedy k-means++: each new centre is the best (lowest potential) of
/// `2 + ln k` candidates drawn proportionally to `w · D²`.
fn plus_plus_init<R: Rng>(x: &Matrix, weights: &[f64], k: usize, rng: &mut R) -> Matrix {
    let n = x.rows();
    let trials = 2 + (k as f64).ln() as usize;
    let mut centroids = Matrix::zeros(0, x.cols());
    let first = sample_weighted(weights, rng).unwrap_or(0);
    centroids.push_row(x.row(first)).expect("row width matches");
    let mut closest: Vec<f64> = (0..n).map(|i| squared_euclidean(x.row(i), x.row(first))).collect();
    for _ in 1..k {
        let scores: Vec<f64> = closest.iter().zip(weights).map(|(d, w)| d * w).collect();
        let mut best: Option<(f64, usize, Vec<f64>)> = None;
        for _ in 0..trials {
            // All remaining mass zero (duplicates): fall back to uniform draws.
            let cand = sample_weighted(&scores, rng).unwrap_or_else(|| rng.random_range(0..n));
            let updated: Vec<f64> = (0..n)
                .map(|i| closest[i].min(squared_euclidean(x.row(i), x.row(cand))))
                .collect();
            let potential: f64 = updated.iter().zip(weights).map(|(d, w)| d * w).sum();
            if best.as_ref().is_none_or(|b| potential < b.0) {
                best = Some((potential, cand, updated));
            }
        }
        let (_, cand, updated) = best.expect("at least one trial");
        centroids.push_row(x.row(cand)).expect("row width matches");
        closest = updated;
    }
    centroids
}

/// Index drawn with probability proportional to `w`; `None` if all are zero.
fn sample_weighted<R: Rng>(w: &[f64], rng: &mut R) -> Option<usize> {
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, &v) in w.iter().enumerate() {
        acc += v;
        if acc > target {
            return Some(i);
        }
    }
    w.iter().rposition(|&v| v > 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cluster_is_the_mean() {
        let x = Matrix::from_rows(&[[0.0, 1.0], [2.0, 3.0], [4.0, 8.0]]).unwrap();
        let (m, a) = kmeans(&x, 1, RunSeed(0)).unwrap();
        assert_eq!(a.labels(), &[0, 0, 0]);
        assert!((m.centroids.get(0, 0) - 2.0).abs() < 1e-12 && (m.centroids.get(0, 1) - 4.0).abs() < 1e-12);
        let total: f64 = x.column_variances().iter().sum::<f64>() * 3.0;
        assert!((m.inertia - total).abs() < 1e-9);
    }

    #[test]
    fn k_equals_n_is_bijective() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [5.0], [9.0]]).unwrap();
        let (m, a) = kmeans(&x, 4, RunSeed(3)).unwrap();
        assert_eq!(m.inertia, 0.0);
        let mut l = a.labels().to_vec();
        l.sort_unstable();
        assert_eq!(l, vec![0, 1, 2, 3]);
    }

    #[test]
    fn k_above_n_rejected() {
        let x = Matrix::from_rows(&[[0.0]]).unwrap();
        assert!(matches!(kmeans(&x, 2, RunSeed(0)), Err(Error::Parameter(_))));
    }

    #[test]
    fn duplicates_do_not_break_seeding() {
        let x = Matrix::from_rows(&[[1.0, 1.0]; 6]).unwrap();
        let (m, a) = kmeans(&x, 3, RunSeed(1)).unwrap();
        assert_eq!(m.inertia, 0.0);
        assert_eq!(a.len(), 6);
    }
}
