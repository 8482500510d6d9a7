use std::collections::BTreeMap;
use std::time::Instant;

use crate::distance::{euclidean, squared_euclidean};
use crate::error::{Error, Result};
use crate::labels::{Algorithm, ClusterAssignment};
use crate::matrix::Matrix;
use crate::neighbors::KdTree;

pub const MAX_ITER: usize = 300;
pub const MIN_BANDWIDTH: f64 = 1e-12;

/// Sample-point adaptive mean shift state: each data point `j` carries its own
/// flat-kernel bandwidth `h_j` and covers a query `y` when `|y - x_j| <= h_j`.
pub struct AdaptiveShift<'a> {
    x: &'a Matrix,
    tree: KdTree<'a>,
    pub bandwidths: Vec<f64>,
    bounds: Vec<f64>,
    /// Kernel weights `(h_min / h_j)^(d + 2)` of the sample-point estimator.
    weights: Vec<f64>,
    pub tolerance: f64,
    /// Anchor radius for candidate reuse in [`AdaptiveShift::climb`].
    reach: f64,
}

impl<'a> AdaptiveShift<'a> {
    pub fn new(x: &'a Matrix, k_bandwidth: usize) -> Result<Self> {
        let n = x.rows();
        if k_bandwidth == 0 || k_bandwidth >= n {
            return Err(Error::Parameter(format!(
                "MS-AMS k_bandwidth must lie in [1, n) (k = {k_bandwidth}, n = {n})"
            )));
        }
        let tree = KdTree::new(x);
        let mut floored = 0;
        let bandwidths: Vec<f64> = (0..n)
            .map(|i| {
                let h = tree.knn(x.row(i), k_bandwidth, Some(i)).last().map_or(0.0, |nb| nb.distance);
                if h < MIN_BANDWIDTH {
                    floored += 1;
                    MIN_BANDWIDTH
                } else {
                    h
                }
            })
            .collect();
        if floored > 0 {
            log::warn!("MS-AMS: {floored} zero bandwidths (duplicate points) floored at {MIN_BANDWIDTH:e}");
        }
        let h_min = bandwidths.iter().copied().fold(f64::INFINITY, f64::min);
        let p = x.cols() as i32 + 2;
        let weights = bandwidths.iter().map(|h| (h_min / h).powi(p)).collect();
        let mut sorted = bandwidths.clone();
        sorted.sort_by(f64::total_cmp);
        let median = sorted[n / 2];
        let bounds = tree.radius_bounds(&bandwidths);
        Ok(Self {
            x,
            tree,
            bandwidths,
            bounds,
            weights,
            tolerance: 1e-5 * median,
            reach: 0.5 * median,
        })
    }

    /// Kernels that can cover any point within `reach` of `anchor`, by index.
    fn candidates(&self, anchor: &[f64], reach: f64) -> Vec<usize> {
        // Slack keeps the set a superset despite rounding in the triangle inequality.
        let margin = reach * (1.0 + 1e-9) + 1e-12;
        let mut out = Vec::new();
        self.tree.within_own_radius_plus(anchor, &self.bandwidths, &self.bounds, margin, |j| out.push(j));
        out.sort_unstable();
        out
    }

    fn step_over(&self, y: &[f64], candidates: &[usize]) -> Option<Vec<f64>> {
        let mut acc = vec![0.0; self.x.cols()];
        let mut total = 0.0;
        for &j in candidates {
            let row = self.x.row(j);
            if euclidean(y, row) <= self.bandwidths[j] {
                let w = self.weights[j];
                total += w;
                for (a, v) in acc.iter_mut().zip(row) {
                    *a += w * v;
                }
            }
        }
        (total > 0.0).then(|| acc.into_iter().map(|a| a / total).collect())
    }

    /// One mean-shift step from `y`; `None` when no kernel covers `y`.
    pub fn step(&self, y: &[f64]) -> Option<Vec<f64>> {
        self.step_over(y, &self.candidates(y, 0.0))
    }

    /// Number of kernels covering `y`.
    pub fn support(&self, y: &[f64]) -> usize {
        let mut count = 0;
        self.tree.within_own_radius(y, &self.bandwidths, &self.bounds, |_| count += 1);
        count
    }

    /// Iterates from `start` until the shift falls below the tolerance.
    ///
    /// Candidate kernels are gathered once per anchor and reused while the
    /// trajectory stays within `reach` of it; by the triangle inequality the
    /// steps are the same as with a full query.
    pub fn climb(&self, start: &[f64]) -> Vec<f64> {
        let mut y = start.to_vec();
        let mut anchor = y.clone();
        let mut candidates = self.candidates(&anchor, self.reach);
        let tol_sq = self.tolerance * self.tolerance;
        for _ in 0..MAX_ITER {
            if euclidean(&y, &anchor) > self.reach {
                anchor.clone_from(&y);
                candidates = self.candidates(&anchor, self.reach);
            }
            let Some(next) = self.step_over(&y, &candidates) else { break };
            // Stop at the point whose own step is short, so it is a fixed
            // point to within the tolerance.
            if squared_euclidean(&next, &y) < tol_sq {
                break;
            }
            y = next;
        }
        y
    }
}

/// Mean shift with per-point k-NN bandwidths, started from every point.
///
/// Converged modes are merged greedily, strongest support first: a mode within
/// `min(h)/2` of an already kept mode joins it. The procedure is
/// deterministic; the seed is accepted for interface uniformity.
pub fn mean_shift_adaptive(x: &Matrix, k_bandwidth: usize, _seed: crate::seed::RunSeed) -> Result<ClusterAssignment> {
    let start = Instant::now();
    let n = x.rows();
    let shift = AdaptiveShift::new(x, k_bandwidth)?;
    let modes: Vec<Vec<f64>> = (0..n).map(|i| shift.climb(x.row(i))).collect();
    let support: Vec<usize> = modes.iter().map(|m| shift.support(m)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| support[b].cmp(&support[a]).then(a.cmp(&b)));

    let h_min = shift.bandwidths.iter().copied().fold(f64::INFINITY, f64::min);
    let merge_sq = (h_min / 2.0).powi(2);
    let mut kept: Vec<usize> = Vec::new();
    let mut labels = vec![0i32; n];
    for &i in &order {
        match kept.iter().position(|&k| squared_euclidean(&modes[k], &modes[i]) <= merge_sq) {
            Some(c) => labels[i] = c as i32,
            None => {
                labels[i] = kept.len() as i32;
                kept.push(i);
            }
        }
    }
    let params = BTreeMap::from([
        ("k_bandwidth".to_string(), k_bandwidth as f64),
        ("min_bandwidth".to_string(), h_min),
    ]);
    Ok(ClusterAssignment::new(Algorithm::MsAms, labels, params)?.with_fit_seconds(start.elapsed().as_secs_f64()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::RunSeed;

    #[test]
    fn converged_mode_is_a_fixed_point() {
        let rows: Vec<[f64; 2]> = (0..60).map(|i| [((i * 7) % 13) as f64 * 0.1, ((i * 5) % 11) as f64 * 0.1]).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let s = AdaptiveShift::new(&x, 10).unwrap();
        for i in 0..x.rows() {
            let m = s.climb(x.row(i));
            let again = s.step(&m).unwrap();
            assert!(squared_euclidean(&m, &again).sqrt() < s.tolerance);
        }
    }

    #[test]
    fn rejects_large_k() {
        let x = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        assert!(mean_shift_adaptive(&x, 2, RunSeed(0)).is_err());
    }

    #[test]
    fn duplicates_get_floored_bandwidth() {
        let x = Matrix::from_rows(&[[1.0]; 5]).unwrap();
        let a = mean_shift_adaptive(&x, 2, RunSeed(0)).unwrap();
        assert_eq!(a.n_clusters(), 1);
    }
}
