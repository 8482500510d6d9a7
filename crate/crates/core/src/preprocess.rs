//! Row cleaning, correlation pruning, two-group ANOVA selection,
//! z-score standardization and NORMAL-label derivation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::SensorFrame;
use crate::fsutil::fmt_f64;
use crate::labels::{LabelVector, ABNORMAL, NORMAL};
use crate::matrix::Matrix;
use crate::schedule::NocSchedule;
use crate::special::f_survival;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreprocessParams {
    pub corr_threshold: f64,
    pub anova_alpha: f64,
}

impl Default for PreprocessParams {
    fn default() -> Self {
        Self {
            corr_threshold: 0.8,
            anova_alpha: 0.05,
        }
    }
}

impl PreprocessParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.corr_threshold > 0.0 && self.corr_threshold <= 1.0) {
            return Err(Error::Parameter("corr_threshold must lie in (0, 1]".into()));
        }
        if !(self.anova_alpha > 0.0 && self.anova_alpha < 1.0) {
            return Err(Error::Parameter("anova_alpha must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Outcome of feature selection for one input channel.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureEntry {
    pub name: String,
    /// Earlier column whose correlation caused this one to be dropped.
    pub dropped_by: Option<String>,
    pub f_value: f64,
    pub p_value: f64,
    /// Column has a single distinct value; it can be neither tested nor scaled.
    pub constant: bool,
    pub kept: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureReport {
    pub entries: Vec<FeatureEntry>,
}

impl FeatureReport {
    pub fn kept_names(&self) -> Vec<&str> {
        self.entries.iter().filter(|e| e.kept).map(|e| e.name.as_str()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&FeatureEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// `feature,f_value,p_value,dropped_by,kept`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature,f_value,p_value,dropped_by,kept\n");
        for e in &self.entries {
            let dropped = match (&e.dropped_by, e.constant) {
                (Some(p), _) => p.clone(),
                (None, true) => "<constant>".into(),
                (None, false) => String::new(),
            };
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.name,
                fmt_f64(e.f_value),
                fmt_f64(e.p_value),
                dropped,
                e.kept
            ));
        }
        out
    }
}

/// Removes every row that has at least one missing cell.
pub fn drop_invalid_rows(frame: &SensorFrame) -> Result<SensorFrame> {
    if frame.n_rows() == 0 {
        return Err(Error::EmptyDataset("loading"));
    }
    if !frame.has_missing() {
        return Ok(frame.clone());
    }
    let keep: Vec<usize> = (0..frame.n_rows()).filter(|&i| !frame.row_has_missing(i)).collect();
    if keep.is_empty() {
        return Err(Error::EmptyDataset("dropping rows with missing values"));
    }
    Ok(frame.select_rows(&keep))
}

fn is_constant(col: &[f64]) -> bool {
    col.windows(2).all(|w| w[0] == w[1])
}

/// Pearson correlation matrix between feature columns. Constant columns get
/// r = 0 against every other column; the diagonal is exactly 1.
pub fn correlation_matrix(frame: &SensorFrame) -> Result<Matrix> {
    let n = frame.n_rows();
    if n < 2 {
        return Err(Error::InsufficientData(format!("correlation needs at least 2 rows, have {n}")));
    }
    let d = frame.n_features();
    let centered: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            let col = frame.values().column(j);
            let mean = col.iter().sum::<f64>() / n as f64;
            col.into_iter().map(|x| x - mean).collect()
        })
        .collect();
    let constant: Vec<bool> = (0..d).map(|j| is_constant(&frame.values().column(j))).collect();
    let ss: Vec<f64> = centered.iter().map(|c| c.iter().map(|x| x * x).sum()).collect();
    let mut r = Matrix::zeros(d, d);
    for i in 0..d {
        r.set(i, i, 1.0);
        for j in i + 1..d {
            let v = if constant[i] || constant[j] {
                0.0
            } else {
                let sxy: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
                (sxy / (ss[i] * ss[j]).sqrt()).clamp(-1.0, 1.0)
            };
            r.set(i, j, v);
            r.set(j, i, v);
        }
    }
    Ok(r)
}

/// Greedy pruning: scanning pairs `(i, j)`, `i < j`, in column order, drop `j`
/// when `|r(i, j)| > threshold` and neither is already dropped.
///
/// Returns the surviving frame and, per input column, the partner that caused
/// its removal.
pub fn prune_correlated(frame: &SensorFrame, threshold: f64) -> Result<(SensorFrame, Vec<Option<usize>>)> {
    let r = correlation_matrix(frame)?;
    let d = frame.n_features();
    let mut dropped_by: Vec<Option<usize>> = vec![None; d];
    for i in 0..d {
        if dropped_by[i].is_some() {
            continue;
        }
        for j in i + 1..d {
            if dropped_by[j].is_none() && r.get(i, j).abs() > threshold {
                dropped_by[j] = Some(i);
            }
        }
    }
    let keep: Vec<usize> = (0..d).filter(|&j| dropped_by[j].is_none()).collect();
    Ok((frame.select_columns(&keep), dropped_by))
}

/// One-way ANOVA of `values` grouped by the binary labels. Returns `(F, p)`.
///
/// A column with zero within-group spread has `F = ∞, p = 0` when the group
/// means differ and `F = 0, p = 1` otherwise.
pub fn anova_two_groups(values: &[f64], labels: &LabelVector) -> Result<(f64, f64)> {
    if values.len() != labels.len() {
        return Err(Error::Dimension {
            expected: labels.len(),
            actual: values.len(),
        });
    }
    let [n0, n1] = labels.counts();
    if n0 == 0 || n1 == 0 {
        return Err(Error::DegenerateLabels("ANOVA needs both NORMAL and ABNORMAL rows".into()));
    }
    let mut sums = [0.0; 2];
    for (&v, &l) in values.iter().zip(labels.as_slice()) {
        sums[l as usize] += v;
    }
    let n = values.len() as f64;
    let means = [sums[0] / n0 as f64, sums[1] / n1 as f64];
    let grand = (sums[0] + sums[1]) / n;
    let ssb = n0 as f64 * (means[0] - grand).powi(2) + n1 as f64 * (means[1] - grand).powi(2);
    let ssw: f64 = values
        .iter()
        .zip(labels.as_slice())
        .map(|(&v, &l)| (v - means[l as usize]).powi(2))
        .sum();
    let df_within = n - 2.0;
    if df_within <= 0.0 {
        return Err(Error::InsufficientData("ANOVA needs at least 3 rows".into()));
    }
    if ssw <= 0.0 {
        return Ok(if ssb > 0.0 { (f64::INFINITY, 0.0) } else { (0.0, 1.0) });
    }
    let f = ssb / (ssw / df_within);
    Ok((f, f_survival(f, 1.0, df_within)?))
}

/// Keeps the columns whose ANOVA p-value is below `alpha`.
pub fn anova_select(frame: &SensorFrame, labels: &LabelVector, alpha: f64) -> Result<(SensorFrame, FeatureReport)> {
    let mut entries = Vec::with_capacity(frame.n_features());
    let mut keep = Vec::new();
    for (j, name) in frame.feature_names().iter().enumerate() {
        let col = frame.values().column(j);
        let constant = is_constant(&col);
        let (f, p) = anova_two_groups(&col, labels)?;
        let kept = !constant && p < alpha;
        if kept {
            keep.push(j);
        }
        entries.push(FeatureEntry {
            name: name.clone(),
            dropped_by: None,
            f_value: f,
            p_value: p,
            constant,
            kept,
        });
    }
    Ok((frame.select_columns(&keep), FeatureReport { entries }))
}

/// Per-feature z-score parameters (population standard deviation).
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub names: Vec<String>,
    pub means: Vec<f64>,
    pub stddevs: Vec<f64>,
}

/// Fits a standardizer; constant columns are left out and their names
/// returned separately.
pub fn fit_standardizer(frame: &SensorFrame) -> Result<(Standardizer, Vec<String>)> {
    if frame.n_rows() == 0 {
        return Err(Error::EmptyDataset("fitting the standardizer"));
    }
    let means = frame.values().column_means();
    let vars = frame.values().column_variances();
    let mut s = Standardizer {
        names: Vec::new(),
        means: Vec::new(),
        stddevs: Vec::new(),
    };
    let mut constant = Vec::new();
    for (j, name) in frame.feature_names().iter().enumerate() {
        if vars[j] > 0.0 && !is_constant(&frame.values().column(j)) {
            s.names.push(name.clone());
            s.means.push(means[j]);
            s.stddevs.push(vars[j].sqrt());
        } else {
            constant.push(name.clone());
        }
    }
    Ok((s, constant))
}

impl Standardizer {
    fn columns_of(&self, frame: &SensorFrame) -> Result<Vec<usize>> {
        self.names
            .iter()
            .map(|n| {
                frame
                    .column_index(n)
                    .ok_or_else(|| Error::Parameter(format!("standardizer feature `{n}` not in frame")))
            })
            .collect()
    }

    /// Selects the fitted columns (by name) and scales them.
    pub fn apply(&self, frame: &SensorFrame) -> Result<SensorFrame> {
        let cols = self.columns_of(frame)?;
        let mut sub = frame.select_columns(&cols).into_values();
        for i in 0..sub.rows() {
            for (j, x) in sub.row_mut(i).iter_mut().enumerate() {
                *x = (*x - self.means[j]) / self.stddevs[j];
            }
        }
        SensorFrame::new(frame.timestamps().to_vec(), self.names.clone(), sub)
    }

    pub fn inverse(&self, frame: &SensorFrame) -> Result<SensorFrame> {
        let cols = self.columns_of(frame)?;
        let mut sub = frame.select_columns(&cols).into_values();
        for i in 0..sub.rows() {
            for (j, x) in sub.row_mut(i).iter_mut().enumerate() {
                *x = *x * self.stddevs[j] + self.means[j];
            }
        }
        SensorFrame::new(frame.timestamps().to_vec(), self.names.clone(), sub)
    }

    /// `feature,mean,stddev`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature,mean,stddev\n");
        for j in 0..self.names.len() {
            out.push_str(&format!("{},{},{}\n", self.names[j], fmt_f64(self.means[j]), fmt_f64(self.stddevs[j])));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let mut s = Standardizer {
            names: Vec::new(),
            means: Vec::new(),
            stddevs: Vec::new(),
        };
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::format("standardizer.csv", 0, e.to_string()))?;
            let num = |k: usize| {
                rec[k]
                    .parse::<f64>()
                    .map_err(|e| Error::format("standardizer.csv", 0, e.to_string()))
            };
            s.names.push(rec[0].to_string());
            s.means.push(num(1)?);
            s.stddevs.push(num(2)?);
        }
        Ok(s)
    }
}

/// NORMAL (1) iff the row timestamp lies inside a NoC interval.
pub fn label_from_noc(frame: &SensorFrame, schedule: &NocSchedule) -> LabelVector {
    let labels = frame
        .timestamps()
        .iter()
        .map(|&t| if schedule.contains(t) { NORMAL } else { ABNORMAL })
        .collect();
    LabelVector::new(labels).expect("labels are binary by construction")
}

/// Everything the later stages need from preprocessing.
#[derive(Debug, Clone)]
pub struct Preprocessed {
    /// Standardized frame restricted to the kept features.
    pub frame: SensorFrame,
    pub labels: LabelVector,
    pub report: FeatureReport,
    pub standardizer: Standardizer,
    pub rows_dropped: usize,
}

/// Drop rows → label → correlation pruning → ANOVA → standardization.
///
/// ANOVA statistics are reported for every input column (including the
/// correlation-dropped ones); only surviving columns can be kept.
pub fn preprocess(frame: &SensorFrame, schedule: &NocSchedule, params: &PreprocessParams) -> Result<Preprocessed> {
    params.validate()?;
    let clean = drop_invalid_rows(frame)?;
    let rows_dropped = frame.n_rows() - clean.n_rows();
    let labels = label_from_noc(&clean, schedule);
    let (_, partners) = prune_correlated(&clean, params.corr_threshold)?;
    let (_, mut report) = anova_select(&clean, &labels, params.anova_alpha)?;
    for (entry, partner) in report.entries.iter_mut().zip(&partners) {
        if let Some(p) = partner {
            entry.dropped_by = Some(clean.feature_names()[*p].clone());
            entry.kept = false;
        }
    }
    let keep: Vec<usize> = (0..clean.n_features()).filter(|&j| report.entries[j].kept).collect();
    if keep.is_empty() {
        return Err(Error::EmptyDataset("feature selection (no feature passed ANOVA)"));
    }
    let selected = clean.select_columns(&keep);
    let (standardizer, constant) = fit_standardizer(&selected)?;
    debug_assert!(constant.is_empty(), "constant columns cannot pass ANOVA");
    let standardized = standardizer.apply(&selected)?;
    Ok(Preprocessed {
        frame: standardized,
        labels,
        report,
        standardizer,
        rows_dropped,
    })
}
