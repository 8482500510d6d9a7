use std::collections::{BTreeMap, VecDeque};
use std::time::Instant;

use crate::error::{Error, Result};
use crate::labels::{Algorithm, ClusterAssignment, NOISE};
use crate::matrix::Matrix;
use crate::neighbors::KdTree;

/// Density-based clustering. A point is core when its closed ε-ball holds at
/// least `min_pts` points (itself included). Clusters are grown from core
/// points in row order; a border point joins the first cluster to reach it.
pub fn dbscan(x: &Matrix, epsilon: f64, min_pts: usize) -> Result<ClusterAssignment> {
    let start = Instant::now();
    let labels = dbscan_labels(x, epsilon, min_pts)?;
    let params = BTreeMap::from([("epsilon".to_string(), epsilon), ("min_pts".to_string(), min_pts as f64)]);
    Ok(ClusterAssignment::new(Algorithm::Dbscan, labels, params)?.with_fit_seconds(start.elapsed().as_secs_f64()))
}

pub fn dbscan_labels(x: &Matrix, epsilon: f64, min_pts: usize) -> Result<Vec<i32>> {
    Ok(dbscan_with_core(x, epsilon, min_pts)?.0)
}

/// Raw labels plus the core flags used to produce them.
pub fn dbscan_with_core(x: &Matrix, epsilon: f64, min_pts: usize) -> Result<(Vec<i32>, Vec<bool>)> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::Parameter(format!("DBSCAN epsilon must be positive, got {epsilon}")));
    }
    if min_pts == 0 {
        return Err(Error::Parameter("DBSCAN min_pts must be at least 1".into()));
    }
    let n = x.rows();
    let tree = KdTree::new(x);
    // Neighbourhoods can be large for wide ε, so count first and re-query
    // core points during expansion instead of storing every list.
    let core: Vec<bool> = (0..n).map(|i| tree.within_radius(x.row(i), epsilon).len() >= min_pts).collect();
    let mut labels = vec![NOISE; n];
    let mut next = 0;
    let mut queue = VecDeque::new();
    for p in 0..n {
        if labels[p] != NOISE || !core[p] {
            continue;
        }
        labels[p] = next;
        queue.push_back(p);
        while let Some(q) = queue.pop_front() {
            for r in tree.within_radius(x.row(q), epsilon) {
                if labels[r] == NOISE {
                    labels[r] = next;
                    if core[r] {
                        queue.push_back(r);
                    }
                }
            }
        }
        next += 1;
    }
    Ok((labels, core))
}
