//! Cluster-label feature injection and SMOTE oversampling.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::SensorFrame;
use crate::labels::{Algorithm, ClusterAssignment, LabelVector, NOISE};
use crate::matrix::Matrix;
use crate::neighbors::KdTree;
use crate::seed::RunSeed;

/// How cluster labels become columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    /// One indicator column per label (noise first).
    #[default]
    OneHot,
    /// A single column holding the integer label, noise as −1.
    Raw,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnrichedFrame {
    /// Base columns followed by the added columns.
    pub frame: SensorFrame,
    pub n_base: usize,
    /// Added column names per algorithm, in column order.
    pub provenance: Vec<(Algorithm, Vec<String>)>,
}

impl EnrichedFrame {
    pub fn added_columns(&self) -> usize {
        self.frame.n_features() - self.n_base
    }

    /// Header comment lines recording where each added column came from.
    pub fn provenance_comments(&self) -> Vec<String> {
        self.provenance
            .iter()
            .map(|(a, cols)| format!("provenance {a}: {}", cols.join(" ")))
            .collect()
    }
}

pub fn augment(frame: &SensorFrame, assignments: &[ClusterAssignment]) -> Result<EnrichedFrame> {
    augment_with(frame, assignments, Encoding::OneHot)
}

/// Appends label columns for every assignment, in the given order.
pub fn augment_with(frame: &SensorFrame, assignments: &[ClusterAssignment], encoding: Encoding) -> Result<EnrichedFrame> {
    let n = frame.n_rows();
    let mut names = frame.feature_names().to_vec();
    let mut blocks = Vec::new();
    let mut provenance = Vec::new();
    for a in assignments {
        if a.len() != n {
            return Err(Error::Dimension {
                expected: n,
                actual: a.len(),
            });
        }
        if provenance.iter().any(|(b, _)| *b == a.algorithm) {
            return Err(Error::Parameter(format!("{} assignment given twice", a.algorithm)));
        }
        let stem = a.algorithm.column_stem();
        let (cols, block) = match encoding {
            Encoding::OneHot => {
                let mut cols = Vec::new();
                if a.has_noise() {
                    cols.push(format!("{stem}_noise"));
                }
                cols.extend((0..a.n_clusters()).map(|c| format!("{stem}_c{c}")));
                let offset = usize::from(a.has_noise());
                let mut block = Matrix::zeros(n, cols.len());
                for (i, &l) in a.labels().iter().enumerate() {
                    let c = if l == NOISE { 0 } else { l as usize + offset };
                    block.set(i, c, 1.0);
                }
                (cols, block)
            }
            Encoding::Raw => {
                let values = a.labels().iter().map(|&l| f64::from(l)).collect();
                (vec![format!("{stem}_id")], Matrix::from_vec(n, 1, values)?)
            }
        };
        if let Some(dup) = cols.iter().find(|c| names.contains(c)) {
            return Err(Error::Parameter(format!("column {dup} already exists")));
        }
        names.extend(cols.iter().cloned());
        blocks.push(block);
        provenance.push((a.algorithm, cols));
    }
    let mut values = frame.values().clone();
    for b in &blocks {
        values = values.hstack(b)?;
    }
    Ok(EnrichedFrame {
        frame: SensorFrame::new(frame.timestamps().to_vec(), names, values)?,
        n_base: frame.n_features(),
        provenance,
    })
}

/// SMOTE: interpolates minority rows towards one of their `k` nearest
/// minority neighbours until both classes are the same size. The original
/// rows come first, unchanged and in order.
pub fn smote(x: &Matrix, y: &LabelVector, k: usize, seed: RunSeed) -> Result<(Matrix, LabelVector)> {
    if x.rows() != y.len() {
        return Err(Error::Dimension {
            expected: x.rows(),
            actual: y.len(),
        });
    }
    if k == 0 {
        return Err(Error::Parameter("SMOTE k must be at least 1".into()));
    }
    let [abnormal, normal] = y.counts();
    if abnormal == normal {
        return Ok((x.clone(), y.clone()));
    }
    let minority_label = if abnormal < normal { 0u8 } else { 1u8 };
    let minority: Vec<usize> = (0..y.len()).filter(|&i| y.as_slice()[i] == minority_label).collect();
    if minority.len() < 2 {
        return Err(Error::Imbalance(format!(
            "minority class has {} sample(s); SMOTE needs at least 2 (disable SMOTE or supply more minority data)",
            minority.len()
        )));
    }
    let k = k.min(minority.len() - 1);
    let need = abnormal.abs_diff(normal);

    let tree = KdTree::over(x, minority.clone());
    let neighbors: Vec<Vec<usize>> = minority
        .par_iter()
        .map(|&i| tree.knn(x.row(i), k, Some(i)).into_iter().map(|nb| nb.index).collect())
        .collect();

    let mut rng = seed.rng_for("smote", 0);
    let mut out = x.clone();
    let mut labels = y.as_slice().to_vec();
    let mut row = vec![0.0; x.cols()];
    for _ in 0..need {
        let m = rng.random_range(0..minority.len());
        let nb = neighbors[m][rng.random_range(0..k)];
        let u: f64 = rng.random();
        let (a, b) = (x.row(minority[m]), x.row(nb));
        for (r, (&p, &q)) in row.iter_mut().zip(a.iter().zip(b)) {
            *r = p + u * (q - p);
        }
        out.push_row(&row)?;
        labels.push(minority_label);
    }
    Ok((out, LabelVector::new(labels)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn frame(n: usize) -> SensorFrame {
        SensorFrame::new((0..n as i64).collect(), vec!["a".into()], Matrix::zeros(n, 1)).unwrap()
    }

    #[test]
    fn one_hot_blocks() {
        let a = ClusterAssignment::new(Algorithm::Hdbscan, vec![-1, 0, 0, -1], BTreeMap::new()).unwrap();
        let e = augment(&frame(4), &[a]).unwrap();
        assert_eq!(e.frame.feature_names(), &["a", "hdbscan_noise", "hdbscan_c0"]);
        assert_eq!(e.frame.values().row(0), &[0.0, 1.0, 0.0]);
        assert_eq!(e.frame.values().row(1), &[0.0, 0.0, 1.0]);
        assert_eq!(e.added_columns(), 2);
    }

    #[test]
    fn raw_mode_and_mismatch() {
        let a = ClusterAssignment::new(Algorithm::KMeans, vec![1, 0, 1], BTreeMap::new()).unwrap();
        let e = augment_with(&frame(3), &[a.clone()], Encoding::Raw).unwrap();
        assert_eq!(e.frame.values().column(1), vec![1.0, 0.0, 1.0]);
        assert!(augment(&frame(4), &[a]).is_err());
    }

    #[test]
    fn smote_segment_case() {
        let x = Matrix::from_rows(&[[0.0, 0.0], [1.0, 1.0], [5.0, 5.0], [6.0, 5.0], [7.0, 5.0], [8.0, 5.0]]).unwrap();
        let y = LabelVector::new(vec![0, 0, 1, 1, 1, 1]).unwrap();
        let (xs, ys) = smote(&x, &y, 1, RunSeed(9)).unwrap();
        assert_eq!(ys.counts(), [4, 4]);
        for i in 6..8 {
            let r = xs.row(i);
            assert_eq!(r[0], r[1]);
            assert!((0.0..=1.0).contains(&r[0]));
        }
    }

    #[test]
    fn smote_single_minority_fails() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0]]).unwrap();
        let y = LabelVector::new(vec![0, 1, 1]).unwrap();
        assert!(matches!(smote(&x, &y, 5, RunSeed(0)), Err(Error::Imbalance(_))));
    }
}
