use std::collections::BTreeMap;
use std::time::Instant;

use super::kmeans::kmeans_weighted;
use crate::distance::squared_euclidean;
use crate::error::{Error, Result};
use crate::labels::{Algorithm, ClusterAssignment};
use crate::matrix::Matrix;
use crate::seed::RunSeed;

/// Clustering feature: count, linear sum and sum of squared norms.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringFeature {
    pub n: f64,
    pub ls: Vec<f64>,
    pub ss: f64,
}

impl ClusteringFeature {
    pub fn empty(d: usize) -> Self {
        Self {
            n: 0.0,
            ls: vec![0.0; d],
            ss: 0.0,
        }
    }

    pub fn from_point(x: &[f64]) -> Self {
        Self {
            n: 1.0,
            ls: x.to_vec(),
            ss: x.iter().map(|v| v * v).sum(),
        }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a [f64]>, d: usize) -> Self {
        let mut cf = Self::empty(d);
        for p in points {
            cf.merge(&Self::from_point(p));
        }
        cf
    }

    pub fn merge(&mut self, other: &ClusteringFeature) {
        self.n += other.n;
        for (a, b) in self.ls.iter_mut().zip(&other.ls) {
            *a += b;
        }
        self.ss += other.ss;
    }

    pub fn centroid(&self) -> Vec<f64> {
        self.ls.iter().map(|v| v / self.n).collect()
    }

    /// Root-mean-square distance of members to the centroid.
    pub fn radius(&self) -> f64 {
        let c2: f64 = self.ls.iter().map(|v| (v / self.n).powi(2)).sum();
        (self.ss / self.n - c2).max(0.0).sqrt()
    }
}

#[derive(Debug)]
struct Subcluster {
    cf: ClusteringFeature,
    centroid: Vec<f64>,
    id: usize,
}

#[derive(Debug)]
struct Entry {
    cf: ClusteringFeature,
    centroid: Vec<f64>,
    child: Box<Node>,
}

#[derive(Debug)]
enum Node {
    Leaf(Vec<Subcluster>),
    Inner(Vec<Entry>),
}

impl Node {
    fn cf(&self, d: usize) -> ClusteringFeature {
        let mut cf = ClusteringFeature::empty(d);
        match self {
            Node::Leaf(subs) => subs.iter().for_each(|s| cf.merge(&s.cf)),
            Node::Inner(entries) => entries.iter().for_each(|e| cf.merge(&e.cf)),
        }
        cf
    }

    fn into_entry(self, d: usize) -> Entry {
        let cf = self.cf(d);
        Entry {
            centroid: cf.centroid(),
            cf,
            child: Box::new(self),
        }
    }
}

fn closest<'a>(centroids: impl Iterator<Item = &'a [f64]>, x: &[f64]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.enumerate() {
        let d = squared_euclidean(c, x);
        if d < best.1 {
            best = (i, d);
        }
    }
    best.0
}

/// Splits `items` around the farthest pair of centroids; each item goes to the
/// nearer seed (ties to the first).
fn split_items<T>(items: Vec<T>, centroid: impl Fn(&T) -> &[f64]) -> (Vec<T>, Vec<T>) {
    let m = items.len();
    let (mut a, mut b, mut far) = (0, 1, -1.0);
    for i in 0..m {
        for j in i + 1..m {
            let d = squared_euclidean(centroid(&items[i]), centroid(&items[j]));
            if d > far {
                (a, b, far) = (i, j, d);
            }
        }
    }
    let seed_a = centroid(&items[a]).to_vec();
    let seed_b = centroid(&items[b]).to_vec();
    let (mut left, mut right) = (Vec::new(), Vec::new());
    for (i, item) in items.into_iter().enumerate() {
        let to_left = if i == a {
            true
        } else if i == b {
            false
        } else {
            squared_euclidean(centroid(&item), &seed_a) <= squared_euclidean(centroid(&item), &seed_b)
        };
        if to_left {
            left.push(item);
        } else {
            right.push(item);
        }
    }
    (left, right)
}

struct Builder<'a> {
    branching: usize,
    threshold_sq: f64,
    d: usize,
    next_id: usize,
    membership: &'a mut Vec<usize>,
}

impl Builder<'_> {
    /// Inserts a point; returns a new sibling when the node had to split.
    fn insert(&mut self, node: &mut Node, x: &[f64]) -> Option<Node> {
        match node {
            Node::Leaf(subs) => {
                if !subs.is_empty() {
                    let i = closest(subs.iter().map(|s| s.centroid.as_slice()), x);
                    let mut merged = subs[i].cf.clone();
                    merged.merge(&ClusteringFeature::from_point(x));
                    if merged.radius().powi(2) <= self.threshold_sq {
                        subs[i].centroid = merged.centroid();
                        subs[i].cf = merged;
                        self.membership.push(subs[i].id);
                        return None;
                    }
                }
                subs.push(Subcluster {
                    cf: ClusteringFeature::from_point(x),
                    centroid: x.to_vec(),
                    id: self.next_id,
                });
                self.membership.push(self.next_id);
                self.next_id += 1;
                if subs.len() <= self.branching {
                    return None;
                }
                let (l, r) = split_items(std::mem::take(subs), |s| s.centroid.as_slice());
                *subs = l;
                Some(Node::Leaf(r))
            }
            Node::Inner(entries) => {
                let i = closest(entries.iter().map(|e| e.centroid.as_slice()), x);
                match self.insert(&mut entries[i].child, x) {
                    None => {
                        entries[i].cf.merge(&ClusteringFeature::from_point(x));
                        entries[i].centroid = entries[i].cf.centroid();
                    }
                    Some(sibling) => {
                        entries[i].cf = entries[i].child.cf(self.d);
                        entries[i].centroid = entries[i].cf.centroid();
                        entries.insert(i + 1, sibling.into_entry(self.d));
                    }
                }
                if entries.len() <= self.branching {
                    return None;
                }
                let (l, r) = split_items(std::mem::take(entries), |e| e.centroid.as_slice());
                *entries = l;
                Some(Node::Inner(r))
            }
        }
    }
}

fn collect_leaves(node: &Node, out: &mut Vec<(usize, Vec<f64>, f64)>) {
    match node {
        Node::Leaf(subs) => out.extend(subs.iter().map(|s| (s.id, s.centroid.clone(), s.cf.n))),
        Node::Inner(entries) => entries.iter().for_each(|e| collect_leaves(&e.child, out)),
    }
}

/// CF-tree summarisation followed by weighted k-means over the leaf
/// subclusters (ordered by their first member's row index).
pub fn birch(x: &Matrix, branching_factor: usize, threshold: f64, k_global: usize, seed: RunSeed) -> Result<ClusterAssignment> {
    let start = Instant::now();
    if branching_factor < 2 {
        return Err(Error::Parameter("BIRCH branching_factor must be at least 2".into()));
    }
    if !(threshold >= 0.0) || !threshold.is_finite() {
        return Err(Error::Parameter(format!("BIRCH threshold must be non-negative, got {threshold}")));
    }
    if k_global == 0 {
        return Err(Error::Parameter("BIRCH needs at least one global cluster".into()));
    }
    let n = x.rows();
    let d = x.cols();
    let mut membership = Vec::with_capacity(n);
    let mut root = Node::Leaf(Vec::new());
    {
        let mut b = Builder {
            branching: branching_factor,
            threshold_sq: threshold * threshold,
            d,
            next_id: 0,
            membership: &mut membership,
        };
        for i in 0..n {
            if let Some(sibling) = b.insert(&mut root, x.row(i)) {
                let old = std::mem::replace(&mut root, Node::Inner(Vec::new()));
                root = Node::Inner(vec![old.into_entry(d), sibling.into_entry(d)]);
            }
        }
    }
    // Subcluster ids are handed out in creation order, i.e. by first member.
    let mut leaves = Vec::new();
    collect_leaves(&root, &mut leaves);
    leaves.sort_by_key(|l| l.0);
    let m = leaves.len();
    let mut params = BTreeMap::from([
        ("branching_factor".to_string(), branching_factor as f64),
        ("threshold".to_string(), threshold),
        ("k".to_string(), k_global as f64),
        ("subclusters".to_string(), m as f64),
    ]);
    if m == 0 {
        return ClusterAssignment::new(Algorithm::Birch, Vec::new(), params);
    }
    let k = k_global.min(m);
    if k < k_global {
        log::warn!("BIRCH produced only {m} subclusters; global step uses k = {k}");
        params.insert("k".to_string(), k as f64);
    }
    let centroids = Matrix::from_rows(&leaves.iter().map(|l| l.1.clone()).collect::<Vec<_>>())?;
    let weights: Vec<f64> = leaves.iter().map(|l| l.2).collect();
    let (_, sub_labels) = kmeans_weighted(&centroids, &weights, k, seed)?;
    let labels = membership.iter().map(|&id| sub_labels[id] as i32).collect();
    Ok(ClusterAssignment::new(Algorithm::Birch, labels, params)?.with_fit_seconds(start.elapsed().as_secs_f64()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point() {
        let x = Matrix::from_rows(&[[1.0, 2.0]]).unwrap();
        let a = birch(&x, 50, 0.5, 3, RunSeed(0)).unwrap();
        assert_eq!(a.labels(), &[0]);
    }

    #[test]
    fn radius_of_two_points() {
        let cf = ClusteringFeature::from_points([[0.0, 0.0].as_slice(), [2.0, 0.0].as_slice()], 2);
        assert!((cf.radius() - 1.0).abs() < 1e-12);
        assert_eq!(cf.centroid(), vec![1.0, 0.0]);
    }

    #[test]
    fn splits_keep_every_point() {
        let rows: Vec<[f64; 2]> = (0..500).map(|i| [(i % 37) as f64, (i / 37) as f64 * 1.3]).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let a = birch(&x, 3, 0.2, 4, RunSeed(5)).unwrap();
        assert_eq!(a.len(), 500);
        assert_eq!(a.n_clusters(), 4);
    }
}
