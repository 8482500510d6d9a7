use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::metrics::{accuracy, evaluate, ClassificationReport};
use super::{predict, train, ClassifierKind, ClassifierParams};
use crate::enrich::smote;
use crate::error::{Error, Result};
use crate::labels::LabelVector;
use crate::matrix::Matrix;
use crate::seed::RunSeed;

fn class_indices(y: &LabelVector) -> [Vec<usize>; 2] {
    let mut out = [Vec::new(), Vec::new()];
    for (i, &l) in y.as_slice().iter().enumerate() {
        out[l as usize].push(i);
    }
    out
}

/// Stratified folds: each class is shuffled and dealt round-robin, the
/// second class continuing where the first stopped so fold sizes stay
/// within one of each other. Index lists are sorted.
pub fn stratified_kfold(y: &LabelVector, folds: usize, seed: RunSeed) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    if folds < 2 {
        return Err(Error::Parameter(format!("need at least 2 folds, got {folds}")));
    }
    let classes = class_indices(y);
    if let Some(small) = classes.iter().map(Vec::len).find(|&c| c < folds) {
        return Err(Error::InsufficientData(format!("a class has {small} rows, fewer than {folds} folds")));
    }
    let mut test = vec![Vec::new(); folds];
    let mut next = 0;
    for (c, mut idx) in classes.into_iter().enumerate() {
        idx.shuffle(&mut seed.rng_for("kfold", c as u64));
        for i in idx {
            test[next].push(i);
            next = (next + 1) % folds;
        }
    }
    let n = y.len();
    Ok(test
        .into_iter()
        .map(|mut t| {
            t.sort_unstable();
            let mut in_test = vec![false; n];
            t.iter().for_each(|&i| in_test[i] = true);
            ((0..n).filter(|&i| !in_test[i]).collect(), t)
        })
        .collect())
}

/// Stratified hold-out split; returns sorted (train, test) indices.
pub fn train_test_split(y: &LabelVector, test_fraction: f64, seed: RunSeed) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Parameter(format!("test fraction {test_fraction} outside (0, 1)")));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (c, mut idx) in class_indices(y).into_iter().enumerate() {
        if idx.len() < 2 {
            return Err(Error::InsufficientData(format!("class {c} has {} row(s); cannot split", idx.len())));
        }
        idx.shuffle(&mut seed.rng_for("split", c as u64));
        let k = ((idx.len() as f64 * test_fraction).round() as usize).clamp(1, idx.len() - 1);
        test.extend_from_slice(&idx[..k]);
        train.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Trains on one partition (optionally SMOTE-balanced) and scores both
/// partitions. Training accuracy is measured on the original, pre-SMOTE rows.
#[allow(clippy::too_many_arguments)]
pub fn fit_and_score(
    kind: ClassifierKind,
    x: &Matrix,
    y: &LabelVector,
    train_idx: &[usize],
    test_idx: &[usize],
    params: &ClassifierParams,
    smote_k: Option<usize>,
    seed: RunSeed,
) -> Result<ClassificationReport> {
    let (xt, yt) = (x.select_rows(train_idx), y.select(train_idx));
    let (xs, ys) = (x.select_rows(test_idx), y.select(test_idx));
    let model = match smote_k {
        Some(k) => {
            let (xb, yb) = smote(&xt, &yt, k, seed.derive("smote", 0))?;
            train(kind, &xb, &yb, params, seed.derive("fit", 0))?
        }
        None => train(kind, &xt, &yt, params, seed.derive("fit", 0))?,
    };
    let mut report = evaluate(&ys, &predict(&model, &xs)?)?;
    report.accuracy_train = accuracy(&yt, &predict(&model, &xt)?)?;
    report.train_seconds = model.train_seconds;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub folds: Vec<ClassificationReport>,
    /// Means over folds (confusion counts summed).
    pub mean: ClassificationReport,
}

/// Stratified k-fold cross-validation. `parallel = false` runs the folds
/// one after another, which keeps the timings comparable.
#[allow(clippy::too_many_arguments)]
pub fn cross_validate(
    kind: ClassifierKind,
    x: &Matrix,
    y: &LabelVector,
    folds: usize,
    params: &ClassifierParams,
    smote_k: Option<usize>,
    seed: RunSeed,
    parallel: bool,
) -> Result<CvResult> {
    let splits = stratified_kfold(y, folds, seed.derive("cv.split", 0))?;
    let run = |(f, (tr, te)): (usize, &(Vec<usize>, Vec<usize>))| {
        fit_and_score(kind, x, y, tr, te, params, smote_k, seed.derive("cv.fold", f as u64))
    };
    let reports: Vec<ClassificationReport> = if parallel {
        splits.par_iter().enumerate().map(run).collect::<Result<_>>()?
    } else {
        splits.iter().enumerate().map(run).collect::<Result<_>>()?
    };
    Ok(CvResult {
        mean: ClassificationReport::mean(&reports)?,
        folds: reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_stratification() {
        let y = LabelVector::new(vec![0, 1, 0, 1, 0, 1, 0, 1, 0, 1]).unwrap();
        let f = stratified_kfold(&y, 5, RunSeed(3)).unwrap();
        for (tr, te) in &f {
            assert_eq!(te.len(), 2);
            assert_eq!(y.select(te).counts(), [1, 1]);
            assert_eq!(tr.len(), 8);
        }
        assert!(stratified_kfold(&y, 6, RunSeed(3)).is_err());
    }

    #[test]
    fn split_fractions() {
        let y = LabelVector::new([vec![0; 20], vec![1; 100]].concat()).unwrap();
        let (tr, te) = train_test_split(&y, 0.25, RunSeed(1)).unwrap();
        assert_eq!(y.select(&te).counts(), [5, 25]);
        assert_eq!(tr.len() + te.len(), 120);
    }
}
