use rayon::prelude::*;

use crate::matrix::Matrix;
use crate::neighbors::KdTree;

/// k-nearest-neighbour majority vote (Euclidean); ties go to ABNORMAL.
#[derive(Debug, Clone, PartialEq)]
pub struct Knn {
    pub k: usize,
    pub x: Matrix,
    pub y: Vec<u8>,
}

impl Knn {
    pub fn fit(x: &Matrix, y: &[u8], k: usize) -> Self {
        Self {
            k: k.min(x.rows()),
            x: x.clone(),
            y: y.to_vec(),
        }
    }

    pub fn predict(&self, q: &Matrix) -> Vec<u8> {
        let tree = KdTree::new(&self.x);
        (0..q.rows())
            .into_par_iter()
            .map(|i| {
                let nn = tree.knn(q.row(i), self.k, None);
                let ones = nn.iter().filter(|n| self.y[n.index] == 1).count();
                u8::from(2 * ones > nn.len())
            })
            .collect()
    }
}
