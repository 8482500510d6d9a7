use super::tree::{grow, Criterion, GrowParams, Presorted, Tree};
use crate::matrix::Matrix;

/// Gradient boosting on the binomial deviance with Newton-step leaves.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBoosting {
    pub init: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
    /// Mean training deviance before the first stage and after each stage.
    pub loss_history: Vec<f64>,
}

pub struct BoostParams {
    pub n_stages: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
}

fn sigmoid(f: f64) -> f64 {
    if f >= 0.0 {
        1.0 / (1.0 + (-f).exp())
    } else {
        let e = f.exp();
        e / (1.0 + e)
    }
}

/// Mean of `log(1 + e^F) - yF`, evaluated stably.
fn deviance(raw: &[f64], y: &[f64]) -> f64 {
    raw.iter()
        .zip(y)
        .map(|(&f, &t)| f.max(0.0) + (-f.abs()).exp().ln_1p() - t * f)
        .sum::<f64>()
        / raw.len() as f64
}

impl GradientBoosting {
    pub fn fit(x: &Matrix, y: &[u8], p: &BoostParams) -> Self {
        let n = x.rows();
        let targets: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
        let prior = targets.iter().sum::<f64>() / n as f64;
        let init = (prior / (1.0 - prior)).ln().clamp(-30.0, 30.0);
        let mut raw = vec![init; n];
        let presorted = Presorted::new(x);
        let weights = vec![1.0; n];
        let grow_params = GrowParams {
            criterion: Criterion::SquaredError,
            max_depth: Some(p.max_depth),
            min_samples_split: 2,
            max_features: None,
        };
        let mut loss_history = vec![deviance(&raw, &targets)];
        let mut trees = Vec::with_capacity(p.n_stages);
        let mut residual = vec![0.0; n];
        for _ in 0..p.n_stages {
            for i in 0..n {
                residual[i] = targets[i] - sigmoid(raw[i]);
            }
            let (mut tree, leaf_of) = grow(x, &presorted, &weights, &residual, &grow_params, None);
            let mut num = vec![0.0; tree.nodes.len()];
            let mut den = vec![0.0; tree.nodes.len()];
            for i in 0..n {
                let l = leaf_of[i] as usize;
                let pr = targets[i] - residual[i];
                num[l] += residual[i];
                den[l] += pr * (1.0 - pr);
            }
            for (l, node) in tree.nodes.iter_mut().enumerate() {
                if node.is_leaf() {
                    node.value = if den[l] < 1e-150 { 0.0 } else { num[l] / den[l] };
                }
            }
            for i in 0..n {
                raw[i] += p.learning_rate * tree.nodes[leaf_of[i] as usize].value;
            }
            loss_history.push(deviance(&raw, &targets));
            trees.push(tree);
        }
        Self {
            init,
            learning_rate: p.learning_rate,
            trees,
            loss_history,
        }
    }

    pub fn decision(&self, row: &[f64]) -> f64 {
        self.init + self.learning_rate * self.trees.iter().map(|t| t.predict_value(row)).sum::<f64>()
    }

    pub fn predict_row(&self, row: &[f64]) -> u8 {
        u8::from(self.decision(row) > 0.0)
    }
}
