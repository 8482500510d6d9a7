use rand::Rng as _;

use super::tree::{grow, Criterion, GrowParams, Presorted, Tree};
use crate::matrix::Matrix;
use crate::seed::RunSeed;

/// Bagged Gini trees with per-node feature subsampling and a hard majority vote.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    pub trees: Vec<Tree>,
}

pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// `None` = ⌊√d⌋ (at least 1).
    pub max_features: Option<usize>,
}

impl RandomForest {
    pub fn fit(x: &Matrix, y: &[u8], p: &ForestParams, seed: RunSeed) -> Self {
        let n = x.rows();
        let presorted = Presorted::new(x);
        let targets: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
        let mtry = p.max_features.unwrap_or(((x.cols() as f64).sqrt() as usize).max(1));
        let grow_params = GrowParams {
            criterion: Criterion::Gini,
            max_depth: p.max_depth,
            min_samples_split: p.min_samples_split,
            max_features: Some(mtry),
        };
        let trees = (0..p.n_trees)
            .map(|t| {
                let mut rng = seed.rng_for("rf.tree", t as u64);
                let mut weights = vec![0.0; n];
                for _ in 0..n {
                    weights[rng.random_range(0..n)] += 1.0;
                }
                grow(x, &presorted, &weights, &targets, &grow_params, Some(&mut rng)).0
            })
            .collect();
        Self { trees }
    }

    /// A single tree's class: its leaf's weighted NORMAL share, ties → 0.
    pub fn tree_vote(tree: &Tree, row: &[f64]) -> u8 {
        u8::from(tree.predict_value(row) > 0.5)
    }

    pub fn predict_row(&self, row: &[f64]) -> u8 {
        let ones = self.trees.iter().filter(|t| Self::tree_vote(t, row) == 1).count();
        u8::from(2 * ones > self.trees.len())
    }
}
