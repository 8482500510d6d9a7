//! The six classifier families, evaluation metrics and cross-validation.

pub mod boosting;
pub mod cv;
pub mod forest;
pub mod knn;
pub mod logistic;
pub mod metrics;
pub mod naive_bayes;
pub mod svc;
pub mod tree;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use cv::{cross_validate, stratified_kfold, train_test_split, CvResult};
pub use metrics::{evaluate, ClassificationReport};

use crate::error::{Error, Result};
use crate::labels::LabelVector;
use crate::matrix::Matrix;
use crate::seed::RunSeed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassifierKind {
    #[serde(rename = "lr")]
    LogisticRegression,
    #[serde(rename = "svc")]
    SvcRbf,
    #[serde(rename = "gnb")]
    GaussianNb,
    #[serde(rename = "gbm")]
    GradientBoosting,
    #[serde(rename = "knn")]
    Knn,
    #[serde(rename = "rf")]
    RandomForest,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 6] = [
        ClassifierKind::LogisticRegression,
        ClassifierKind::SvcRbf,
        ClassifierKind::GaussianNb,
        ClassifierKind::GradientBoosting,
        ClassifierKind::Knn,
        ClassifierKind::RandomForest,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::LogisticRegression => "LR",
            ClassifierKind::SvcRbf => "SVC",
            ClassifierKind::GaussianNb => "GNB",
            ClassifierKind::GradientBoosting => "GBM",
            ClassifierKind::Knn => "KNN",
            ClassifierKind::RandomForest => "RF",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parameter(format!("unknown classifier kind {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifierParams {
    pub lr_c: f64,
    pub lr_tol: f64,
    pub lr_max_iter: usize,
    pub svc_c: f64,
    pub svc_tol: f64,
    /// Unset = `1 / (d · mean feature variance)`.
    pub svc_gamma: Option<f64>,
    pub svc_cache_mb: usize,
    pub gnb_var_smoothing: f64,
    pub gbm_stages: usize,
    pub gbm_learning_rate: f64,
    pub gbm_max_depth: usize,
    pub knn_k: usize,
    pub rf_trees: usize,
    /// Unset = ⌊√d⌋.
    pub rf_max_features: Option<usize>,
    pub rf_max_depth: Option<usize>,
    pub rf_min_samples_split: usize,
}

impl Default for ClassifierParams {
    fn default() -> Self {
        Self {
            lr_c: 1.0,
            lr_tol: 1e-6,
            lr_max_iter: 1000,
            svc_c: 1.0,
            svc_tol: 1e-3,
            svc_gamma: None,
            svc_cache_mb: 256,
            gnb_var_smoothing: 1e-9,
            gbm_stages: 100,
            gbm_learning_rate: 0.1,
            gbm_max_depth: 3,
            knn_k: 5,
            rf_trees: 100,
            rf_max_features: None,
            rf_max_depth: None,
            rf_min_samples_split: 2,
        }
    }
}

impl ClassifierParams {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.lr_c > 0.0, "lr_c must be positive"),
            (self.lr_tol > 0.0, "lr_tol must be positive"),
            (self.lr_max_iter >= 1, "lr_max_iter must be at least 1"),
            (self.svc_c > 0.0, "svc_c must be positive"),
            (self.svc_tol > 0.0, "svc_tol must be positive"),
            (self.svc_gamma.is_none_or(|g| g > 0.0), "svc_gamma must be positive"),
            (self.gnb_var_smoothing >= 0.0, "gnb_var_smoothing must be non-negative"),
            (self.gbm_stages >= 1, "gbm_stages must be at least 1"),
            (self.gbm_learning_rate > 0.0, "gbm_learning_rate must be positive"),
            (self.gbm_max_depth >= 1, "gbm_max_depth must be at least 1"),
            (self.knn_k >= 1, "knn_k must be at least 1"),
            (self.rf_trees >= 1, "rf_trees must be at least 1"),
            (self.rf_max_features.is_none_or(|m| m >= 1), "rf_max_features must be at least 1"),
            (self.rf_min_samples_split >= 2, "rf_min_samples_split must be at least 2"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(Error::Parameter((*msg).into())),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Logistic(logistic::Logistic),
    Svc(svc::Svc),
    GaussianNb(naive_bayes::GaussianNb),
    GradientBoosting(boosting::GradientBoosting),
    Knn(knn::Knn),
    RandomForest(forest::RandomForest),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub kind: ClassifierKind,
    pub n_features: usize,
    pub model: Model,
    /// Wall-clock time of the fit call alone.
    pub train_seconds: f64,
}

/// Fits one classifier. Only the fit itself is timed.
pub fn train(kind: ClassifierKind, x: &Matrix, y: &LabelVector, p: &ClassifierParams, seed: RunSeed) -> Result<TrainedModel> {
    p.validate()?;
    if x.rows() != y.len() {
        return Err(Error::Dimension {
            expected: x.rows(),
            actual: y.len(),
        });
    }
    let [abnormal, normal] = y.counts();
    if abnormal == 0 || normal == 0 {
        return Err(Error::DegenerateLabels(format!(
            "training target has a single class ({abnormal} ABNORMAL, {normal} NORMAL)"
        )));
    }
    if x.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("training matrix contains non-finite values".into()));
    }
    let labels = y.as_slice();
    let start = Instant::now();
    let model = match kind {
        ClassifierKind::LogisticRegression => Model::Logistic(logistic::Logistic::fit(
            x,
            labels,
            &logistic::LogisticParams {
                c: p.lr_c,
                tol: p.lr_tol,
                max_iter: p.lr_max_iter,
            },
        )?),
        ClassifierKind::SvcRbf => Model::Svc(svc::Svc::fit(
            x,
            labels,
            &svc::SvcParams {
                c: p.svc_c,
                tol: p.svc_tol,
                gamma: p.svc_gamma,
                cache_mb: p.svc_cache_mb,
                max_iter: None,
            },
        )?),
        ClassifierKind::GaussianNb => Model::GaussianNb(naive_bayes::GaussianNb::fit(x, labels, p.gnb_var_smoothing)),
        ClassifierKind::GradientBoosting => Model::GradientBoosting(boosting::GradientBoosting::fit(
            x,
            labels,
            &boosting::BoostParams {
                n_stages: p.gbm_stages,
                learning_rate: p.gbm_learning_rate,
                max_depth: p.gbm_max_depth,
            },
        )),
        ClassifierKind::Knn => Model::Knn(knn::Knn::fit(x, labels, p.knn_k)),
        ClassifierKind::RandomForest => Model::RandomForest(forest::RandomForest::fit(
            x,
            labels,
            &forest::ForestParams {
                n_trees: p.rf_trees,
                max_depth: p.rf_max_depth,
                min_samples_split: p.rf_min_samples_split,
                max_features: p.rf_max_features,
            },
            seed.derive("rf", 0),
        )),
    };
    Ok(TrainedModel {
        kind,
        n_features: x.cols(),
        model,
        train_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Hard 0/1 predictions.
pub fn predict(m: &TrainedModel, x: &Matrix) -> Result<LabelVector> {
    use rayon::prelude::*;
    if x.cols() != m.n_features {
        return Err(Error::Dimension {
            expected: m.n_features,
            actual: x.cols(),
        });
    }
    let rows = |f: &(dyn Fn(&[f64]) -> u8 + Sync)| -> Vec<u8> { (0..x.rows()).into_par_iter().map(|i| f(x.row(i))).collect() };
    let labels = match &m.model {
        Model::Logistic(l) => rows(&|r| l.predict_row(r)),
        Model::Svc(s) => rows(&|r| s.predict_row(r)),
        Model::GaussianNb(g) => rows(&|r| g.predict_row(r)),
        Model::GradientBoosting(g) => rows(&|r| g.predict_row(r)),
        Model::Knn(k) => k.predict(x),
        Model::RandomForest(f) => rows(&|r| f.predict_row(r)),
    };
    LabelVector::new(labels)
}
