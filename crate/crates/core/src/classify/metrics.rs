use crate::error::{Error, Result};
use crate::labels::LabelVector;

/// Test-set metrics plus training accuracy and time for one fitted model.
///
/// Per-class arrays are indexed by label (0 = ABNORMAL, 1 = NORMAL).
/// `confusion[t][p]` counts rows of true class `t` predicted as `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationReport {
    pub accuracy_train: f64,
    pub accuracy_test: f64,
    pub precision: [f64; 2],
    pub recall: [f64; 2],
    pub f1: [f64; 2],
    pub recall_macro: f64,
    pub recall_weighted: f64,
    pub f1_macro: f64,
    pub f1_weighted: f64,
    pub confusion: [[usize; 2]; 2],
    pub train_seconds: f64,
}

impl ClassificationReport {
    /// NORMAL rows flagged ABNORMAL (positive class = ABNORMAL).
    pub fn fp(&self) -> usize {
        self.confusion[1][0]
    }

    /// ABNORMAL rows missed (positive class = ABNORMAL).
    pub fn fn_(&self) -> usize {
        self.confusion[0][1]
    }

    pub fn total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }

    /// Field-wise mean of the scores and times; confusion counts are summed.
    pub fn mean(reports: &[ClassificationReport]) -> Result<ClassificationReport> {
        let k = reports.len();
        if k == 0 {
            return Err(Error::InsufficientData("no reports to average".into()));
        }
        let avg = |f: &dyn Fn(&ClassificationReport) -> f64| reports.iter().map(f).sum::<f64>() / k as f64;
        let mut confusion = [[0; 2]; 2];
        for r in reports {
            for t in 0..2 {
                for p in 0..2 {
                    confusion[t][p] += r.confusion[t][p];
                }
            }
        }
        Ok(ClassificationReport {
            accuracy_train: avg(&|r| r.accuracy_train),
            accuracy_test: avg(&|r| r.accuracy_test),
            precision: [avg(&|r| r.precision[0]), avg(&|r| r.precision[1])],
            recall: [avg(&|r| r.recall[0]), avg(&|r| r.recall[1])],
            f1: [avg(&|r| r.f1[0]), avg(&|r| r.f1[1])],
            recall_macro: avg(&|r| r.recall_macro),
            recall_weighted: avg(&|r| r.recall_weighted),
            f1_macro: avg(&|r| r.f1_macro),
            f1_weighted: avg(&|r| r.f1_weighted),
            confusion,
            train_seconds: avg(&|r| r.train_seconds),
        })
    }
}

pub fn accuracy(y_true: &LabelVector, y_pred: &LabelVector) -> Result<f64> {
    check_len(y_true, y_pred)?;
    let hits = y_true.as_slice().iter().zip(y_pred.as_slice()).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / y_true.len().max(1) as f64)
}

fn check_len(a: &LabelVector, b: &LabelVector) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(())
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Test-side metrics; `accuracy_train` and `train_seconds` are left at 0.
pub fn evaluate(y_true: &LabelVector, y_pred: &LabelVector) -> Result<ClassificationReport> {
    check_len(y_true, y_pred)?;
    let mut confusion = [[0usize; 2]; 2];
    for (&t, &p) in y_true.as_slice().iter().zip(y_pred.as_slice()) {
        confusion[t as usize][p as usize] += 1;
    }
    Ok(ClassificationReport::from_confusion(confusion))
}

impl ClassificationReport {
    /// All test-side scores follow from the confusion matrix.
    pub fn from_confusion(confusion: [[usize; 2]; 2]) -> ClassificationReport {
        let n: usize = confusion.iter().flatten().sum();
        let mut precision = [0.0; 2];
        let mut recall = [0.0; 2];
        let mut f1 = [0.0; 2];
        let support = [confusion[0][0] + confusion[0][1], confusion[1][0] + confusion[1][1]];
        for c in 0..2 {
            let tp = confusion[c][c];
            precision[c] = ratio(tp, confusion[0][c] + confusion[1][c]);
            recall[c] = ratio(tp, support[c]);
            // 2TP / (2TP + FP + FN) equals the harmonic mean and is 0 when undefined.
            f1[c] = ratio(2 * tp, 2 * tp + (support[c] - tp) + (confusion[1 - c][c]));
        }
        let weighted = |v: [f64; 2]| (v[0] * support[0] as f64 + v[1] * support[1] as f64) / n.max(1) as f64;
        ClassificationReport {
            accuracy_train: 0.0,
            accuracy_test: ratio(confusion[0][0] + confusion[1][1], n),
            precision,
            recall,
            f1,
            recall_macro: (recall[0] + recall[1]) / 2.0,
            recall_weighted: weighted(recall),
            f1_macro: (f1[0] + f1[1]) / 2.0,
            f1_weighted: weighted(f1),
            confusion,
            train_seconds: 0.0,
        }
    }
}
