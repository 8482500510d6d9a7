use std::collections::{BTreeMap, VecDeque};
use std::time::Instant;

use crate::distance::euclidean;
use crate::error::{Error, Result};
use crate::labels::{Algorithm, ClusterAssignment, NOISE};
use crate::matrix::Matrix;
use crate::neighbors::KdTree;

/// Smallest distance used when converting to λ = 1/distance, so exact
/// duplicates give a large finite λ instead of ∞.
const MIN_DISTANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CondensedEdge {
    /// Cluster id (`>= n_points`).
    pub parent: usize,
    /// Point index (`< n_points`) or cluster id.
    pub child: usize,
    pub lambda: f64,
    pub child_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CondensedTree {
    pub n_points: usize,
    pub edges: Vec<CondensedEdge>,
    /// Excess-of-mass stability per cluster id, indexed by `id - n_points`.
    pub stability: Vec<f64>,
    /// Cluster ids chosen by excess-of-mass selection.
    pub selected: Vec<usize>,
}

impl CondensedTree {
    pub fn root(&self) -> usize {
        self.n_points
    }
}

/// Distance from each point to its `min_samples`-th nearest other point
/// (the farthest other point when fewer exist).
pub fn core_distances(x: &Matrix, min_samples: usize) -> Vec<f64> {
    let n = x.rows();
    if n <= 1 {
        return vec![0.0; n];
    }
    let k = min_samples.clamp(1, n - 1);
    let tree = KdTree::new(x);
    (0..n)
        .map(|i| tree.knn(x.row(i), k, Some(i)).last().map_or(0.0, |nb| nb.distance))
        .collect()
}

/// Prim's algorithm on the dense mutual-reachability graph. Edges are
/// returned in insertion order as `(from, to, weight)`.
pub fn mutual_reachability_mst(x: &Matrix, core: &[f64]) -> Vec<(usize, usize, f64)> {
    let n = x.rows();
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    if n < 2 {
        return edges;
    }
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut from = vec![0usize; n];
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        let row = x.row(current);
        let core_c = core[current];
        let mut next = usize::MAX;
        let mut next_w = f64::INFINITY;
        for v in 0..n {
            if in_tree[v] {
                continue;
            }
            let d = euclidean(row, x.row(v)).max(core_c).max(core[v]);
            if d < best[v] {
                best[v] = d;
                from[v] = current;
            }
            if best[v] < next_w || next == usize::MAX {
                next_w = best[v];
                next = v;
            }
        }
        in_tree[next] = true;
        edges.push((from[next], next, next_w));
        current = next;
    }
    edges
}

struct Hierarchy {
    /// Children and merge distance for internal node `n + i`.
    merges: Vec<(usize, usize, f64)>,
    sizes: Vec<usize>,
}

fn single_linkage(n: usize, mut mst: Vec<(usize, usize, f64)>) -> Hierarchy {
    mst.sort_by(|a, b| a.2.total_cmp(&b.2));
    let total = 2 * n - 1;
    let mut parent: Vec<usize> = (0..total).collect();
    let mut sizes = vec![1usize; total];
    fn find(parent: &mut [usize], mut v: usize) -> usize {
        while parent[v] != v {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        v
    }
    let mut merges = Vec::with_capacity(n - 1);
    for (step, (a, b, w)) in mst.into_iter().enumerate() {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        let node = n + step;
        parent[ra] = node;
        parent[rb] = node;
        sizes[node] = sizes[ra] + sizes[rb];
        merges.push((ra, rb, w));
    }
    Hierarchy { merges, sizes }
}

fn leaves_under(h: &Hierarchy, n: usize, node: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut stack = vec![node];
    while let Some(v) = stack.pop() {
        if v < n {
            out.push(v);
        } else {
            let (l, r, _) = h.merges[v - n];
            stack.push(r);
            stack.push(l);
        }
    }
    out
}

/// Returns the condensed edges and the number of cluster ids used.
fn condense(h: &Hierarchy, n: usize, min_cluster_size: usize) -> (Vec<CondensedEdge>, usize) {
    let root = 2 * n - 2;
    let mut relabel = vec![usize::MAX; 2 * n - 1];
    relabel[root] = n;
    let mut next_label = n + 1;
    let mut edges = Vec::new();
    let mut queue = VecDeque::from([root]);
    while let Some(node) = queue.pop_front() {
        if node < n {
            continue;
        }
        let (left, right, dist) = h.merges[node - n];
        let lambda = 1.0 / dist.max(MIN_DISTANCE);
        let parent = relabel[node];
        let (ls, rs) = (h.sizes[left], h.sizes[right]);
        let fall_out = |edges: &mut Vec<CondensedEdge>, sub: usize| {
            for p in leaves_under(h, n, sub) {
                edges.push(CondensedEdge {
                    parent,
                    child: p,
                    lambda,
                    child_size: 1,
                });
            }
        };
        match (ls >= min_cluster_size, rs >= min_cluster_size) {
            (true, true) => {
                for (child, size) in [(left, ls), (right, rs)] {
                    relabel[child] = next_label;
                    edges.push(CondensedEdge {
                        parent,
                        child: next_label,
                        lambda,
                        child_size: size,
                    });
                    next_label += 1;
                    queue.push_back(child);
                }
            }
            (false, false) => {
                fall_out(&mut edges, left);
                fall_out(&mut edges, right);
            }
            (true, false) => {
                relabel[left] = parent;
                fall_out(&mut edges, right);
                queue.push_back(left);
            }
            (false, true) => {
                relabel[right] = parent;
                fall_out(&mut edges, left);
                queue.push_back(right);
            }
        }
    }
    (edges, next_label - n)
}

/// Hierarchical density clustering with excess-of-mass cluster selection.
/// The root cluster is never selected, so data without any split is all noise.
pub fn hdbscan(x: &Matrix, min_cluster_size: usize, min_samples: usize) -> Result<(CondensedTree, ClusterAssignment)> {
    let start = Instant::now();
    if min_cluster_size < 2 {
        return Err(Error::Parameter("HDBSCAN min_cluster_size must be at least 2".into()));
    }
    if min_samples == 0 {
        return Err(Error::Parameter("HDBSCAN min_samples must be at least 1".into()));
    }
    let n = x.rows();
    let params = BTreeMap::from([
        ("min_cluster_size".to_string(), min_cluster_size as f64),
        ("min_samples".to_string(), min_samples as f64),
    ]);
    if n < 2 {
        let tree = CondensedTree {
            n_points: n,
            edges: Vec::new(),
            stability: vec![0.0],
            selected: Vec::new(),
        };
        let a = ClusterAssignment::new(Algorithm::Hdbscan, vec![NOISE; n], params)?;
        return Ok((tree, a));
    }
    let core = core_distances(x, min_samples);
    let mst = mutual_reachability_mst(x, &core);
    let hierarchy = single_linkage(n, mst);
    let (edges, n_clusters) = condense(&hierarchy, n, min_cluster_size);

    let mut birth = vec![0.0; n_clusters];
    let mut cluster_parent = vec![usize::MAX; n_clusters];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n_clusters];
    for e in &edges {
        if e.child >= n {
            birth[e.child - n] = e.lambda;
            cluster_parent[e.child - n] = e.parent;
            children[e.parent - n].push(e.child);
        }
    }
    let mut stability = vec![0.0; n_clusters];
    for e in &edges {
        stability[e.parent - n] += (e.lambda - birth[e.parent - n]) * e.child_size as f64;
    }

    let mut is_selected = vec![false; n_clusters];
    let mut subtree = stability.clone();
    for c in (1..n_clusters).rev() {
        let child_sum: f64 = children[c].iter().map(|&ch| subtree[ch - n]).sum();
        if !children[c].is_empty() && child_sum > stability[c] {
            subtree[c] = child_sum;
        } else {
            is_selected[c] = true;
            let mut stack = children[c].clone();
            while let Some(d) = stack.pop() {
                is_selected[d - n] = false;
                stack.extend(&children[d - n]);
            }
        }
    }

    let mut labels = vec![NOISE; n];
    let mut cluster_of = BTreeMap::new();
    for (next, c) in (0..n_clusters).filter(|&c| is_selected[c]).enumerate() {
        cluster_of.insert(c + n, next as i32);
    }
    for e in edges.iter().filter(|e| e.child < n) {
        let mut c = e.parent;
        loop {
            if let Some(&l) = cluster_of.get(&c) {
                labels[e.child] = l;
                break;
            }
            let up = cluster_parent[c - n];
            if up == usize::MAX {
                break;
            }
            c = up;
        }
    }
    let selected = cluster_of.keys().copied().collect();
    let tree = CondensedTree {
        n_points: n,
        edges,
        stability,
        selected,
    };
    let a = ClusterAssignment::new(Algorithm::Hdbscan, labels, params)?.with_fit_seconds(start.elapsed().as_secs_f64());
    Ok((tree, a))
}
