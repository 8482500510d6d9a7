//! CART trees grown level by level over presorted feature orders.
//!
//! Each node is summarised by `(w, s)`: the total sample weight and the
//! weighted sum of the target. Gini trees use a 0/1 target; regression trees
//! use residuals with unit weights. Split thresholds are exact midpoints
//! between consecutive distinct values, and `x <= threshold` goes left.

use rand::seq::index::sample;

use crate::matrix::Matrix;
use crate::seed::Rng;

const LEAF: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    Gini,
    SquaredError,
}

impl Criterion {
    /// Node cost up to a per-criterion constant: weighted Gini impurity / 2,
    /// or SSE minus the (split-invariant) sum of squared targets.
    #[inline]
    fn cost(self, w: f64, s: f64) -> f64 {
        if w <= 0.0 {
            return 0.0;
        }
        match self {
            Criterion::Gini => s * (w - s) / w,
            Criterion::SquaredError => -s * s / w,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    /// Split feature, or `u32::MAX` for a leaf.
    pub feature: u32,
    pub threshold: f64,
    pub left: u32,
    pub right: u32,
    /// Leaf output: weighted target mean unless overwritten by the caller.
    pub value: f64,
    pub weight: f64,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.feature == LEAF
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Index of the leaf reached by `row`.
    pub fn leaf(&self, row: &[f64]) -> usize {
        let mut id = 0;
        loop {
            let n = &self.nodes[id];
            if n.is_leaf() {
                return id;
            }
            id = if row[n.feature as usize] <= n.threshold { n.left } else { n.right } as usize;
        }
    }

    pub fn predict_value(&self, row: &[f64]) -> f64 {
        self.nodes[self.leaf(row)].value
    }

    pub fn depth(&self) -> usize {
        fn rec(t: &Tree, id: usize) -> usize {
            let n = &t.nodes[id];
            if n.is_leaf() {
                0
            } else {
                1 + rec(t, n.left as usize).max(rec(t, n.right as usize))
            }
        }
        rec(self, 0)
    }
}

/// Row indices sorted by `(value, index)` for every feature.
#[derive(Debug, Clone)]
pub struct Presorted {
    order: Vec<Vec<u32>>,
}

impl Presorted {
    pub fn new(x: &Matrix) -> Self {
        let order = (0..x.cols())
            .map(|f| {
                let mut idx: Vec<u32> = (0..x.rows() as u32).collect();
                idx.sort_by(|&a, &b| x.get(a as usize, f).total_cmp(&x.get(b as usize, f)).then(a.cmp(&b)));
                idx
            })
            .collect();
        Self { order }
    }
}

pub struct GrowParams {
    pub criterion: Criterion,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Features drawn per node among those that vary inside it; `None` = all.
    pub max_features: Option<usize>,
}

/// A split candidate for one (node, feature) pair.
#[derive(Clone, Copy)]
struct Best {
    cost: f64,
    threshold: f64,
}

struct Frontier {
    node: u32,
    depth: usize,
    w: f64,
    s: f64,
    count: usize,
}

/// Grows one tree on the rows with positive weight. Returns the tree and the
/// leaf index of every row (`u32::MAX` for rows with zero weight).
pub fn grow(
    x: &Matrix,
    presorted: &Presorted,
    weights: &[f64],
    targets: &[f64],
    params: &GrowParams,
    mut rng: Option<&mut Rng>,
) -> (Tree, Vec<u32>) {
    let n = x.rows();
    let d = x.cols();
    let mut slot_of: Vec<u32> = (0..n).map(|i| if weights[i] > 0.0 { 0 } else { LEAF }).collect();
    let mut leaf_of = vec![LEAF; n];
    let mut orders: Vec<Vec<u32>> = presorted
        .order
        .iter()
        .map(|o| o.iter().copied().filter(|&i| slot_of[i as usize] != LEAF).collect())
        .collect();
    let mut nodes = Vec::new();
    let (w0, s0, c0) = (0..n).filter(|&i| weights[i] > 0.0).fold((0.0, 0.0, 0), |(w, s, c), i| {
        (w + weights[i], s + weights[i] * targets[i], c + 1)
    });
    nodes.push(leaf_node(w0, s0));
    let mut frontier = vec![Frontier {
        node: 0,
        depth: 0,
        w: w0,
        s: s0,
        count: c0,
    }];
    let crit = params.criterion;

    while !frontier.is_empty() {
        let m = frontier.len();
        let splittable: Vec<bool> = frontier
            .iter()
            .map(|f| {
                params.max_depth.is_none_or(|md| f.depth < md)
                    && f.count >= params.min_samples_split.max(2)
                    && !(crit == Criterion::Gini && (f.s <= 0.0 || f.s >= f.w))
            })
            .collect();

        // Scan every feature once, tracking per-node prefix sums.
        let mut best = vec![None::<Best>; m * d];
        let mut lw = vec![0.0; m];
        let mut ls = vec![0.0; m];
        let mut last = vec![f64::NAN; m];
        for f in 0..d {
            lw.iter_mut().for_each(|v| *v = 0.0);
            ls.iter_mut().for_each(|v| *v = 0.0);
            last.iter_mut().for_each(|v| *v = f64::NAN);
            for &i in &orders[f] {
                let i = i as usize;
                let k = slot_of[i] as usize;
                if !splittable[k] {
                    continue;
                }
                let v = x.get(i, f);
                if lw[k] > 0.0 && v > last[k] {
                    let fr = &frontier[k];
                    let cost = crit.cost(lw[k], ls[k]) + crit.cost(fr.w - lw[k], fr.s - ls[k]);
                    let b = &mut best[k * d + f];
                    if b.is_none_or(|b| cost < b.cost) {
                        let mid = last[k] + (v - last[k]) / 2.0;
                        let threshold = if mid < v { mid } else { last[k] };
                        *b = Some(Best { cost, threshold });
                    }
                }
                lw[k] += weights[i];
                ls[k] += weights[i] * targets[i];
                last[k] = v;
            }
        }

        // Choose a split per node.
        let mut split: Vec<Option<(usize, f64)>> = vec![None; m];
        for k in 0..m {
            if !splittable[k] {
                continue;
            }
            let varying: Vec<usize> = (0..d).filter(|&f| best[k * d + f].is_some()).collect();
            let candidates: Vec<usize> = match (params.max_features, rng.as_deref_mut()) {
                (Some(mf), Some(r)) if mf < varying.len() => {
                    let mut pick: Vec<usize> = sample(r, varying.len(), mf).into_iter().map(|p| varying[p]).collect();
                    pick.sort_unstable();
                    pick
                }
                _ => varying,
            };
            let fr = &frontier[k];
            let parent = crit.cost(fr.w, fr.s);
            let mut chosen: Option<(usize, Best)> = None;
            for f in candidates {
                let b = best[k * d + f].expect("varying feature has a candidate");
                if chosen.is_none_or(|c| b.cost < c.1.cost) {
                    chosen = Some((f, b));
                }
            }
            if let Some((f, b)) = chosen {
                let gain = parent - b.cost;
                if gain > 1e-12 * (parent.abs() + b.cost.abs()) && gain > 0.0 {
                    split[k] = Some((f, b.threshold));
                }
            }
        }

        // Route rows to children and collect their statistics.
        let mut child_slot = vec![(LEAF, LEAF); m];
        let mut next = Vec::new();
        for k in 0..m {
            let node = frontier[k].node as usize;
            if let Some((f, t)) = split[k] {
                let l = nodes.len() as u32;
                nodes.push(leaf_node(0.0, 0.0));
                nodes.push(leaf_node(0.0, 0.0));
                nodes[node].feature = f as u32;
                nodes[node].threshold = t;
                nodes[node].left = l;
                nodes[node].right = l + 1;
                child_slot[k] = (next.len() as u32, next.len() as u32 + 1);
                for c in 0..2 {
                    next.push(Frontier {
                        node: l + c,
                        depth: frontier[k].depth + 1,
                        w: 0.0,
                        s: 0.0,
                        count: 0,
                    });
                }
            }
        }
        for &i in &orders[0] {
            let i = i as usize;
            let k = slot_of[i] as usize;
            match split[k] {
                Some((f, t)) => {
                    let c = if x.get(i, f) <= t { child_slot[k].0 } else { child_slot[k].1 };
                    let fr = &mut next[c as usize];
                    fr.w += weights[i];
                    fr.s += weights[i] * targets[i];
                    fr.count += 1;
                    slot_of[i] = c;
                }
                None => {
                    leaf_of[i] = frontier[k].node;
                    slot_of[i] = LEAF;
                }
            }
        }
        for fr in &next {
            nodes[fr.node as usize] = leaf_node(fr.w, fr.s);
        }
        for o in orders.iter_mut() {
            o.retain(|&i| slot_of[i as usize] != LEAF);
        }
        frontier = next;
    }
    (Tree { nodes }, leaf_of)
}

fn leaf_node(w: f64, s: f64) -> Node {
    Node {
        feature: LEAF,
        threshold: 0.0,
        left: LEAF,
        right: LEAF,
        value: if w > 0.0 { s / w } else { 0.0 },
        weight: w,
    }
}
