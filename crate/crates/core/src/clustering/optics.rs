use std::collections::BTreeMap;
use std::time::Instant;

use crate::distance::euclidean;
use crate::error::{Error, Result};
use crate::labels::{Algorithm, ClusterAssignment, NOISE};
use crate::matrix::Matrix;
use crate::neighbors::KdTree;

/// OPTICS output with unbounded ε. Per-point arrays are indexed by row.
#[derive(Debug, Clone, PartialEq)]
pub struct Reachability {
    pub ordering: Vec<usize>,
    /// `+∞` for the first point of every processing sweep.
    pub reachability: Vec<f64>,
    pub core_distances: Vec<f64>,
    pub predecessor: Vec<Option<usize>>,
}

impl Reachability {
    /// `(point, reachability)` in processing order.
    pub fn plot(&self) -> Vec<(usize, f64)> {
        self.ordering.iter().map(|&p| (p, self.reachability[p])).collect()
    }
}

/// Core distance: distance to the `(min_pts - 1)`-th nearest other point, so
/// that a point is core at ε exactly when its closed ε-ball holds `min_pts`
/// points (itself included), matching [`super::dbscan`].
pub fn optics_core_distances(x: &Matrix, min_pts: usize) -> Vec<f64> {
    let n = x.rows();
    let k = min_pts.saturating_sub(1);
    if k == 0 {
        return vec![0.0; n];
    }
    if k >= n {
        return vec![f64::INFINITY; n];
    }
    let tree = KdTree::new(x);
    (0..n)
        .map(|i| tree.knn(x.row(i), k, Some(i)).last().map_or(0.0, |nb| nb.distance))
        .collect()
}

/// Dense OPTICS ordering. The next point is the unprocessed one with the
/// smallest reachability, ties to the lowest row index.
pub fn optics_ordering(x: &Matrix, min_pts: usize) -> Result<Reachability> {
    if min_pts < 2 {
        return Err(Error::Parameter("OPTICS min_pts must be at least 2".into()));
    }
    let n = x.rows();
    let core = optics_core_distances(x, min_pts);
    let mut reach = vec![f64::INFINITY; n];
    let mut predecessor = vec![None; n];
    let mut processed = vec![false; n];
    let mut ordering = Vec::with_capacity(n);
    let mut unprocessed: Vec<usize> = (0..n).collect();
    while !unprocessed.is_empty() {
        let mut pos = 0;
        for (k, &v) in unprocessed.iter().enumerate() {
            if reach[v] < reach[unprocessed[pos]] {
                pos = k;
            }
        }
        let p = unprocessed.remove(pos);
        processed[p] = true;
        ordering.push(p);
        if !core[p].is_finite() {
            continue;
        }
        let row = x.row(p);
        for &o in &unprocessed {
            let r = euclidean(row, x.row(o)).max(core[p]);
            if r < reach[o] {
                reach[o] = r;
                predecessor[o] = Some(p);
            }
        }
    }
    debug_assert!(processed.iter().all(|&b| b));
    Ok(Reachability {
        ordering,
        reachability: reach,
        core_distances: core,
        predecessor,
    })
}

/// Flat clustering equivalent to DBSCAN at `epsilon` (border points may differ).
pub fn extract_dbscan(r: &Reachability, epsilon: f64) -> Vec<i32> {
    let n = r.ordering.len();
    let mut labels = vec![0i32; n];
    let mut current = -1;
    for &p in &r.ordering {
        let far = r.reachability[p] > epsilon;
        let near_core = r.core_distances[p] <= epsilon;
        if far && near_core {
            current += 1;
        }
        labels[p] = if far && !near_core { NOISE } else { current };
    }
    labels
}

#[derive(Debug, Clone)]
struct SteepDown {
    start: usize,
    end: usize,
    mib: f64,
}

fn extend_region(steep: &[bool], xward: &[bool], start: usize, min_samples: usize) -> usize {
    let mut non_xward = 0;
    let mut end = start;
    for index in start..steep.len() {
        if steep[index] {
            non_xward = 0;
            end = index;
        } else if !xward[index] {
            non_xward += 1;
            if non_xward > min_samples {
                break;
            }
        } else {
            return end;
        }
    }
    end
}

fn update_filter_sdas(sdas: Vec<SteepDown>, mib: f64, xi_c: f64, plot: &[f64]) -> Vec<SteepDown> {
    if mib.is_infinite() {
        return Vec::new();
    }
    sdas.into_iter()
        .filter(|d| mib <= plot[d.start] * xi_c)
        .map(|mut d| {
            d.mib = d.mib.max(mib);
            d
        })
        .collect()
}

fn correct_predecessor(
    plot: &[f64],
    pred: &[Option<usize>],
    ordering: &[usize],
    s: usize,
    mut e: usize,
) -> Option<(usize, usize)> {
    while s < e {
        if plot[s] > plot[e] {
            return Some((s, e));
        }
        if let Some(pe) = pred[e] {
            if ordering[s..e].contains(&pe) {
                return Some((s, e));
            }
        }
        e -= 1;
    }
    None
}

/// ξ-steep cluster extraction over the reachability plot, with predecessor
/// correction. Returns clusters as inclusive `(start, end)` positions in the
/// ordering, smaller (nested) clusters first.
fn xi_clusters(r: &Reachability, xi: f64, min_samples: usize, min_cluster_size: usize) -> Vec<(usize, usize)> {
    let n = r.ordering.len();
    let mut plot: Vec<f64> = r.ordering.iter().map(|&p| r.reachability[p]).collect();
    let pred: Vec<Option<usize>> = r.ordering.iter().map(|&p| r.predecessor[p]).collect();
    // A trailing ∞ lets clusters that run to the end of the plot close.
    plot.push(f64::INFINITY);
    let xi_c = 1.0 - xi;
    let ratio: Vec<f64> = (0..n).map(|i| plot[i] / plot[i + 1]).collect();
    let steep_up: Vec<bool> = ratio.iter().map(|&q| q <= xi_c).collect();
    let steep_down: Vec<bool> = ratio.iter().map(|&q| q >= 1.0 / xi_c).collect();
    let down: Vec<bool> = ratio.iter().map(|&q| q > 1.0).collect();
    let up: Vec<bool> = ratio.iter().map(|&q| q < 1.0).collect();

    let mut sdas: Vec<SteepDown> = Vec::new();
    let mut clusters = Vec::new();
    let mut index = 0;
    let mut mib: f64 = 0.0;
    for steep_index in (0..n).filter(|&i| steep_up[i] || steep_down[i]) {
        if steep_index < index {
            continue;
        }
        mib = plot[index..=steep_index].iter().copied().fold(mib, f64::max);
        sdas = update_filter_sdas(sdas, mib, xi_c, &plot);
        if steep_down[steep_index] {
            let end = extend_region(&steep_down, &up, steep_index, min_samples);
            sdas.push(SteepDown {
                start: steep_index,
                end,
                mib: 0.0,
            });
            index = end + 1;
            mib = plot[index];
        } else {
            let u_start = steep_index;
            let u_end = extend_region(&steep_up, &down, u_start, min_samples);
            index = u_end + 1;
            mib = plot[index];
            let mut found = Vec::new();
            for d in &sdas {
                let mut c_start = d.start;
                let mut c_end = u_end;
                if plot[c_end + 1] * xi_c < d.mib {
                    continue;
                }
                let d_max = plot[d.start];
                if d_max * xi_c >= plot[c_end + 1] {
                    while plot[c_start + 1] > plot[c_end + 1] && c_start < d.end {
                        c_start += 1;
                    }
                } else if plot[c_end + 1] * xi_c >= d_max {
                    while plot[c_end - 1] > d_max && c_end > u_start {
                        c_end -= 1;
                    }
                }
                let Some((s, e)) = correct_predecessor(&plot, &pred, &r.ordering, c_start, c_end) else {
                    continue;
                };
                if e - s + 1 < min_cluster_size || s > d.end || e < u_start {
                    continue;
                }
                found.push((s, e));
            }
            found.reverse();
            clusters.extend(found);
        }
    }
    clusters
}

/// ξ-extracted flat labels: clusters are taken smallest-first and a cluster
/// overlapping an already labelled one is skipped.
pub fn extract_xi(r: &Reachability, xi: f64, min_samples: usize, min_cluster_size: usize) -> Vec<i32> {
    let n = r.ordering.len();
    let mut by_position = vec![NOISE; n];
    let mut label = 0;
    for (s, e) in xi_clusters(r, xi, min_samples, min_cluster_size) {
        if by_position[s..=e].iter().all(|&l| l == NOISE) {
            by_position[s..=e].fill(label);
            label += 1;
        }
    }
    let mut labels = vec![NOISE; n];
    for (pos, &p) in r.ordering.iter().enumerate() {
        labels[p] = by_position[pos];
    }
    labels
}

/// OPTICS with ε = ∞ and ξ extraction; the minimum cluster size equals `min_pts`.
pub fn optics(x: &Matrix, min_pts: usize, xi: f64) -> Result<(Reachability, ClusterAssignment)> {
    let start = Instant::now();
    if !(xi > 0.0 && xi < 1.0) {
        return Err(Error::Parameter(format!("OPTICS xi must lie in (0, 1), got {xi}")));
    }
    let r = optics_ordering(x, min_pts)?;
    let labels = extract_xi(&r, xi, min_pts, min_pts);
    let params = BTreeMap::from([("min_pts".to_string(), min_pts as f64), ("xi".to_string(), xi)]);
    let a = ClusterAssignment::new(Algorithm::Optics, labels, params)?.with_fit_seconds(start.elapsed().as_secs_f64());
    Ok((r, a))
}
