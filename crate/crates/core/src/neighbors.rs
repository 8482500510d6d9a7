//! Exact nearest-neighbour and range queries over a [`Matrix`].
//!
//! A k-d tree with per-node bounding boxes. Results are identical to a
//! brute-force scan: neighbours are ordered by `(distance, index)` and the
//! distances are computed with [`crate::distance::euclidean`].

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::distance::euclidean;
use crate::matrix::Matrix;

const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

impl Eq for Neighbor {}

impl Ord for Neighbor {
    fn cmp(&self, other: &Self) -> Ordering {
        self.distance
            .total_cmp(&other.distance)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Neighbor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone)]
struct Node {
    start: usize,
    end: usize,
    // Children; `usize::MAX` marks a leaf.
    left: usize,
    right: usize,
}

#[derive(Debug, Clone)]
pub struct KdTree<'a> {
    data: &'a Matrix,
    order: Vec<usize>,
    nodes: Vec<Node>,
    // lo/hi corners, 2*d values per node.
    bounds: Vec<f64>,
}

impl<'a> KdTree<'a> {
    pub fn new(data: &'a Matrix) -> Self {
        Self::over(data, (0..data.rows()).collect())
    }

    /// Index over a subset of rows; query results refer to original row indices.
    pub fn over(data: &'a Matrix, rows: Vec<usize>) -> Self {
        let mut tree = KdTree {
            data,
            order: rows,
            nodes: Vec::new(),
            bounds: Vec::new(),
        };
        if !tree.order.is_empty() {
            let n = tree.order.len();
            tree.build(0, n);
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let d = self.data.cols();
        let id = self.nodes.len();
        self.nodes.push(Node {
            start,
            end,
            left: usize::MAX,
            right: usize::MAX,
        });
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for &i in &self.order[start..end] {
            for (j, &v) in self.data.row(i).iter().enumerate() {
                lo[j] = lo[j].min(v);
                hi[j] = hi[j].max(v);
            }
        }
        self.bounds.extend_from_slice(&lo);
        self.bounds.extend_from_slice(&hi);

        if end - start <= LEAF_SIZE || d == 0 {
            return id;
        }
        let (dim, spread) = (0..d)
            .map(|j| (j, hi[j] - lo[j]))
            .fold((0, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best });
        if spread <= 0.0 {
            return id;
        }
        let mid = start + (end - start) / 2;
        let data = self.data;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            data.get(a, dim).total_cmp(&data.get(b, dim)).then(a.cmp(&b))
        });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id].left = left;
        self.nodes[id].right = right;
        id
    }

    /// Lower bound on the distance from `q` to any point inside node `id`.
    fn box_distance(&self, id: usize, q: &[f64]) -> f64 {
        let d = q.len();
        let lo = &self.bounds[2 * d * id..2 * d * id + d];
        let hi = &self.bounds[2 * d * id + d..2 * d * (id + 1)];
        let mut acc = 0.0;
        for j in 0..d {
            let gap = if q[j] < lo[j] {
                lo[j] - q[j]
            } else if q[j] > hi[j] {
                q[j] - hi[j]
            } else {
                0.0
            };
            acc += gap * gap;
        }
        acc.sqrt()
    }

    /// The `k` nearest rows to `query`, sorted by `(distance, index)`.
    /// `exclude` skips one row (typically the query's own index).
    pub fn knn(&self, query: &[f64], k: usize, exclude: Option<usize>) -> Vec<Neighbor> {
        if k == 0 || self.nodes.is_empty() {
            return Vec::new();
        }
        let mut heap: BinaryHeap<Neighbor> = BinaryHeap::with_capacity(k + 1);
        self.knn_rec(0, query, k, exclude, &mut heap);
        heap.into_sorted_vec()
    }

    fn knn_rec(&self, id: usize, q: &[f64], k: usize, exclude: Option<usize>, heap: &mut BinaryHeap<Neighbor>) {
        if heap.len() == k {
            let worst = heap.peek().map_or(f64::INFINITY, |n| n.distance);
            if self.box_distance(id, q) > worst {
                return;
            }
        }
        let node = &self.nodes[id];
        if node.left == usize::MAX {
            for &i in &self.order[node.start..node.end] {
                if Some(i) == exclude {
                    continue;
                }
                let cand = Neighbor {
                    index: i,
                    distance: euclidean(q, self.data.row(i)),
                };
                if heap.len() < k {
                    heap.push(cand);
                } else if cand < *heap.peek().expect("heap is full") {
                    heap.pop();
                    heap.push(cand);
                }
            }
            return;
        }
        let (l, r) = (node.left, node.right);
        let (first, second) = if self.box_distance(l, q) <= self.box_distance(r, q) {
            (l, r)
        } else {
            (r, l)
        };
        self.knn_rec(first, q, k, exclude, heap);
        self.knn_rec(second, q, k, exclude, heap);
    }

    /// All rows within distance `radius` (inclusive) of `query`, ascending by index.
    pub fn within_radius(&self, query: &[f64], radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        if !self.nodes.is_empty() {
            self.radius_rec(0, query, radius, &mut out);
        }
        out.sort_unstable();
        out
    }

    fn radius_rec(&self, id: usize, q: &[f64], r: f64, out: &mut Vec<usize>) {
        if self.box_distance(id, q) > r {
            return;
        }
        let node = &self.nodes[id];
        if node.left == usize::MAX {
            out.extend(
                self.order[node.start..node.end]
                    .iter()
                    .copied()
                    .filter(|&i| euclidean(q, self.data.row(i)) <= r),
            );
            return;
        }
        self.radius_rec(node.left, q, r, out);
        self.radius_rec(node.right, q, r, out);
    }

    /// Per-node maxima of a per-row radius, for [`KdTree::within_own_radius`].
    pub fn radius_bounds(&self, radii: &[f64]) -> Vec<f64> {
        self.nodes
            .iter()
            .map(|n| {
                self.order[n.start..n.end]
                    .iter()
                    .map(|&i| radii[i])
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect()
    }

    /// Calls `visit(j)` for every row `j` with `distance(query, x_j) <= radii[j]`.
    /// `bounds` must come from [`KdTree::radius_bounds`] with the same radii.
    pub fn within_own_radius<F: FnMut(usize)>(&self, query: &[f64], radii: &[f64], bounds: &[f64], visit: F) {
        self.within_own_radius_plus(query, radii, bounds, 0.0, visit);
    }

    /// As [`KdTree::within_own_radius`] with every radius enlarged by `margin`.
    pub fn within_own_radius_plus<F: FnMut(usize)>(&self, query: &[f64], radii: &[f64], bounds: &[f64], margin: f64, mut visit: F) {
        if !self.nodes.is_empty() {
            self.own_radius_rec(0, query, radii, bounds, margin, &mut visit);
        }
    }

    fn own_radius_rec<F: FnMut(usize)>(&self, id: usize, q: &[f64], radii: &[f64], bounds: &[f64], margin: f64, visit: &mut F) {
        if self.box_distance(id, q) > bounds[id] + margin {
            return;
        }
        let node = &self.nodes[id];
        if node.left == usize::MAX {
            for &i in &self.order[node.start..node.end] {
                if euclidean(q, self.data.row(i)) <= radii[i] + margin {
                    visit(i);
                }
            }
            return;
        }
        self.own_radius_rec(node.left, q, radii, bounds, margin, visit);
        self.own_radius_rec(node.right, q, radii, bounds, margin, visit);
    }
}
