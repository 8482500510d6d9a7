//! Paired with/without-enrichment comparison, significance tests, and the
//! tables and figures written under `report/`.
//!
//! Everything derived from wall-clock training time goes to files whose
//! names start with `timings`, so all other artifacts are byte-stable for a
//! fixed configuration and seed.

use std::path::{Path, PathBuf};

use crate::classify::{ClassificationReport, ClassifierKind};
use crate::error::{Error, Result};
use crate::fsutil::{fmt_f64, write_atomic};
use crate::labels::ClusterAssignment;
use crate::special::student_t_two_sided;
use crate::svg::{Chart, PALETTE};
use crate::tune::TuneResult;

/// Paired two-sided Student t-test on per-pair differences. Returns `(t, p)`.
pub fn paired_t_test(diffs: &[f64]) -> Result<(f64, f64)> {
    let n = diffs.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("paired t-test needs at least 2 differences, got {n}")));
    }
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    if !(var > 0.0) {
        return Err(Error::DegenerateStatistics("differences have zero variance".into()));
    }
    let t = mean / (var / n as f64).sqrt();
    Ok((t, student_t_two_sided(t, (n - 1) as f64)?))
}

/// Mean of `with − without` over `(with, without)` pairs.
pub fn mean_accuracy_gain(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::InsufficientData("no accuracy pairs".into()));
    }
    Ok(pairs.iter().map(|(w, wo)| w - wo).sum::<f64>() / pairs.len() as f64)
}

/// Candidate summaries of the training-time change, all in the direction
/// "positive = enrichment made training faster".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeStatistics {
    /// Mean over kinds of `(without − with) / without`.
    pub mean_relative_reduction: f64,
    /// `(Σ without − Σ with) / Σ without`.
    pub total_reduction: f64,
    /// Mean of `without − with`, in seconds.
    pub mean_difference: f64,
}

/// `pairs` are `(with, without)` training times in seconds.
pub fn time_statistics(pairs: &[(f64, f64)]) -> Result<TimeStatistics> {
    if pairs.is_empty() {
        return Err(Error::InsufficientData("no timing pairs".into()));
    }
    let n = pairs.len() as f64;
    let rel = |w: f64, wo: f64| if wo > 0.0 { (wo - w) / wo } else { 0.0 };
    let (sw, swo) = pairs.iter().fold((0.0, 0.0), |(a, b), (w, wo)| (a + w, b + wo));
    Ok(TimeStatistics {
        mean_relative_reduction: pairs.iter().map(|&(w, wo)| rel(w, wo)).sum::<f64>() / n,
        total_reduction: rel(sw, swo),
        mean_difference: (swo - sw) / n,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KindComparison {
    pub kind: ClassifierKind,
    pub with: ClassificationReport,
    pub without: ClassificationReport,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub kinds: Vec<KindComparison>,
    /// Test accuracy `with − without`, per kind.
    pub accuracy_deltas: Vec<f64>,
    /// Training seconds `without − with`, per kind.
    pub time_deltas_seconds: Vec<f64>,
    pub mean_accuracy_gain: f64,
    pub time: TimeStatistics,
    /// `None` when the test is undefined (fewer than two kinds or constant differences).
    pub accuracy_test: Option<TTest>,
    pub time_test: Option<TTest>,
}

fn try_t_test(what: &str, diffs: &[f64]) -> Option<TTest> {
    match paired_t_test(diffs) {
        Ok((t, p)) => Some(TTest { t, p }),
        Err(e) => {
            log::warn!("{what} t-test undefined: {e}");
            None
        }
    }
}

pub fn compare(kinds: Vec<KindComparison>) -> Result<ComparisonReport> {
    if kinds.is_empty() {
        return Err(Error::InsufficientData("comparison has no classifier results".into()));
    }
    let acc: Vec<(f64, f64)> = kinds.iter().map(|k| (k.with.accuracy_test, k.without.accuracy_test)).collect();
    let secs: Vec<(f64, f64)> = kinds.iter().map(|k| (k.with.train_seconds, k.without.train_seconds)).collect();
    let accuracy_deltas: Vec<f64> = acc.iter().map(|(w, wo)| w - wo).collect();
    let time_deltas_seconds: Vec<f64> = secs.iter().map(|(w, wo)| wo - w).collect();
    Ok(ComparisonReport {
        mean_accuracy_gain: mean_accuracy_gain(&acc)?,
        time: time_statistics(&secs)?,
        accuracy_test: try_t_test("accuracy", &accuracy_deltas),
        time_test: try_t_test("training time", &time_deltas_seconds),
        accuracy_deltas,
        time_deltas_seconds,
        kinds,
    })
}

/// A rendered file, relative to the report directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub path: PathBuf,
    pub bytes: Vec<u8>,
}

impl Artifact {
    fn new(path: &str, text: String) -> Self {
        Self {
            path: PathBuf::from(path),
            bytes: text.into_bytes(),
        }
    }

    /// Wall-clock-derived files, excluded from reproducibility comparisons.
    pub fn is_timing(path: &Path) -> bool {
        path.file_name().is_some_and(|n| n.to_string_lossy().starts_with("timings"))
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_else(|| "NaN".into())
}

fn rows(c: &ComparisonReport) -> impl Iterator<Item = (ClassifierKind, bool, &ClassificationReport)> {
    c.kinds.iter().flat_map(|k| [(k.kind, true, &k.with), (k.kind, false, &k.without)])
}

/// Accuracy and per-class quality tables, the paired statistics, and the
/// separated timing tables.
pub fn emit_tables(c: &ComparisonReport) -> Result<Vec<Artifact>> {
    if c.kinds.is_empty() {
        return Err(Error::InsufficientData("nothing to tabulate".into()));
    }
    let mark = |e: bool| if e { " *" } else { "" };

    let mut acc_csv = String::from("kind,enriched,acc_train,acc_test\n");
    let mut acc_md = String::from("| Algorithm | Mean Accuracy (train) | Accuracy (test) |\n|---|---:|---:|\n");
    let mut q_csv = String::from(
        "kind,enriched,recall_abnormal,recall_macro,recall_weighted,f1_abnormal,f1_macro,f1_weighted,fp,fn,fp_normal_positive,fn_normal_positive\n",
    );
    let mut q_md = String::from("| Algorithm | Recall (macro) | F1 (macro) | FP | FN |\n|---|---:|---:|---:|---:|\n");
    for (kind, enriched, r) in rows(c) {
        acc_csv.push_str(&format!("{kind},{enriched},{},{}\n", fmt_f64(r.accuracy_train), fmt_f64(r.accuracy_test)));
        acc_md.push_str(&format!("| {kind}{} | {:.4} | {:.4} |\n", mark(enriched), r.accuracy_train, r.accuracy_test));
        // With NORMAL as the positive class, false positives and negatives swap.
        q_csv.push_str(&format!(
            "{kind},{enriched},{},{},{},{},{},{},{},{},{},{}\n",
            fmt_f64(r.recall[0]),
            fmt_f64(r.recall_macro),
            fmt_f64(r.recall_weighted),
            fmt_f64(r.f1[0]),
            fmt_f64(r.f1_macro),
            fmt_f64(r.f1_weighted),
            r.fp(),
            r.fn_(),
            r.fn_(),
            r.fp()
        ));
        q_md.push_str(&format!(
            "| {kind}{} | {:.2} | {:.2} | {} | {} |\n",
            mark(enriched),
            r.recall_macro,
            r.f1_macro,
            r.fp(),
            r.fn_()
        ));
    }
    acc_md.push_str("\nRows marked * use the cluster-label features.\n");
    q_md.push_str("\nRows marked * use the cluster-label features. Positive class: ABNORMAL.\n");

    let mut delta_csv = String::from("kind,acc_with,acc_without,acc_delta\n");
    for (k, d) in c.kinds.iter().zip(&c.accuracy_deltas) {
        delta_csv.push_str(&format!(
            "{},{},{},{}\n",
            k.kind,
            fmt_f64(k.with.accuracy_test),
            fmt_f64(k.without.accuracy_test),
            fmt_f64(*d)
        ));
    }
    let stats_csv = format!(
        "statistic,value\nmean_accuracy_gain,{}\nt_accuracy,{}\np_accuracy,{}\n",
        fmt_f64(c.mean_accuracy_gain),
        opt(c.accuracy_test.map(|t| t.t)),
        opt(c.accuracy_test.map(|t| t.p))
    );

    let mut t_csv = String::from("kind,seconds_with,seconds_without,reduction_seconds\n");
    let mut t_md = String::from("| Algorithm | Train time with (s) | Train time without (s) | Reduction (s) |\n|---|---:|---:|---:|\n");
    for (k, d) in c.kinds.iter().zip(&c.time_deltas_seconds) {
        t_csv.push_str(&format!(
            "{},{},{},{}\n",
            k.kind,
            fmt_f64(k.with.train_seconds),
            fmt_f64(k.without.train_seconds),
            fmt_f64(*d)
        ));
        t_md.push_str(&format!(
            "| {} | {:.3} | {:.3} | {:.3} |\n",
            k.kind, k.with.train_seconds, k.without.train_seconds, d
        ));
    }
    let tt = |f: fn(&TTest) -> f64| c.time_test.as_ref().map(f);
    t_md.push_str(&format!(
        "\nMean relative reduction: {:.2}%. Total-time reduction: {:.2}%. Mean difference: {:.3} s. Paired t = {}, p = {}.\n",
        100.0 * c.time.mean_relative_reduction,
        100.0 * c.time.total_reduction,
        c.time.mean_difference,
        tt(|t| t.t).map_or("undefined".into(), |v| format!("{v:.4}")),
        tt(|t| t.p).map_or("undefined".into(), |v| format!("{v:.4}")),
    ));
    let t_stats = format!(
        "statistic,value\nmean_relative_reduction,{}\ntotal_reduction,{}\nmean_difference_seconds,{}\nt_time,{}\np_time,{}\n",
        fmt_f64(c.time.mean_relative_reduction),
        fmt_f64(c.time.total_reduction),
        fmt_f64(c.time.mean_difference),
        opt(tt(|t| t.t)),
        opt(tt(|t| t.p))
    );

    Ok(vec![
        Artifact::new("tables/accuracy.csv", acc_csv),
        Artifact::new("tables/accuracy.md", acc_md),
        Artifact::new("tables/quality.csv", q_csv),
        Artifact::new("tables/quality.md", q_md),
        Artifact::new("tables/accuracy_deltas.csv", delta_csv),
        Artifact::new("tables/statistics.csv", stats_csv),
        Artifact::new("tables/timings.csv", t_csv),
        Artifact::new("tables/timings.md", t_md),
        Artifact::new("tables/timings_statistics.csv", t_stats),
    ])
}

fn delta_bars(title: &str, y_label: &str, kinds: &[ClassifierKind], values: &[f64]) -> String {
    let lo = values.iter().copied().fold(0.0, f64::min);
    let hi = values.iter().copied().fold(0.0, f64::max);
    let pad = 0.1 * (hi - lo).max(1e-12);
    let mut chart = Chart::new(title, "classifier", y_label, (0.0, kinds.len() as f64), (lo - pad, hi + pad));
    chart.set_x_ticks(kinds.iter().enumerate().map(|(i, k)| (i as f64 + 0.5, k.name().to_string())).collect());
    for (i, v) in values.iter().enumerate() {
        chart.bar(i as f64 + 0.5, 0.6, *v, if *v >= 0.0 { PALETTE[2] } else { PALETTE[3] });
    }
    chart.render()
}

/// Bar charts of the per-kind accuracy gain and training-time reduction.
pub fn emit_comparison_figures(c: &ComparisonReport) -> Vec<Artifact> {
    let kinds: Vec<ClassifierKind> = c.kinds.iter().map(|k| k.kind).collect();
    vec![
        Artifact::new(
            "figures/accuracy_deltas.svg",
            delta_bars("Test accuracy gain from cluster features", "accuracy (with − without)", &kinds, &c.accuracy_deltas),
        ),
        Artifact::new(
            "figures/timings_deltas.svg",
            delta_bars("Training time reduction", "seconds (without − with)", &kinds, &c.time_deltas_seconds),
        ),
    ]
}

fn curve_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
}

/// k-distance curves with knees, and the silhouette sweeps, one series per subset.
pub fn emit_tuning_figures(t: &TuneResult) -> Vec<Artifact> {
    let label = |f: f64| format!("{:.0}% subset", 100.0 * f);

    let max_len = t.subsets.iter().map(|s| s.kdist_curve.len()).max().unwrap_or(1);
    let (lo, hi) = curve_range(t.subsets.iter().flat_map(|s| s.kdist_curve.iter().copied()));
    let mut kd = Chart::new("Sorted k-distance", "point (sorted)", "mean k-NN distance", (0.0, max_len as f64), (lo.min(0.0), hi));
    for (i, s) in t.subsets.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let pts: Vec<(f64, f64)> = s.kdist_curve.iter().enumerate().map(|(j, &v)| (j as f64, v)).collect();
        kd.polyline(&pts, colour);
        if let Some((j, v)) = s.knee {
            kd.marker(j as f64, v, colour);
        }
        kd.add_legend(&label(s.fraction), colour);
    }

    let defined = |v: &[(f64, Option<f64>)]| -> Vec<(f64, f64)> { v.iter().filter_map(|&(x, s)| s.map(|s| (x, s))).collect() };
    let series = |get: &dyn Fn(&crate::tune::SubsetTune) -> Vec<(f64, f64)>| -> Vec<(f64, Vec<(f64, f64)>)> {
        t.subsets.iter().map(|s| (s.fraction, get(s))).collect()
    };
    let sweep_chart = |title: &str, x_label: &str, data: Vec<(f64, Vec<(f64, f64)>)>| {
        let (x0, x1) = curve_range(data.iter().flat_map(|(_, p)| p.iter().map(|q| q.0)));
        let (y0, y1) = curve_range(data.iter().flat_map(|(_, p)| p.iter().map(|q| q.1)));
        let finite = |(a, b): (f64, f64)| if a.is_finite() { (a, b) } else { (0.0, 1.0) };
        let (y0, y1) = finite((y0, y1));
        let mut c = Chart::new(title, x_label, "silhouette", finite((x0, x1)), (y0.min(0.0), y1.max(0.0)));
        for (i, (f, pts)) in data.iter().enumerate() {
            let colour = PALETTE[i % PALETTE.len()];
            c.polyline(pts, colour);
            c.add_legend(&label(*f), colour);
        }
        c.render()
    };
    let eps = series(&|s| defined(&s.silhouette_vs_epsilon));
    let ks = series(&|s| defined(&s.silhouette_vs_k.iter().map(|&(k, v)| (k as f64, v)).collect::<Vec<_>>()));
    vec![
        Artifact::new("figures/kdistance.svg", kd.render()),
        Artifact::new("figures/silhouette_epsilon.svg", sweep_chart("Silhouette vs epsilon (DBSCAN)", "epsilon", eps)),
        Artifact::new("figures/silhouette_k.svg", sweep_chart("Silhouette vs k (k-means)", "k", ks)),
    ]
}

const TIMELINE_BINS: usize = 1000;

/// One strip per algorithm (plus the NoC periods on top) showing cluster
/// labels along the row axis. Long inputs are sampled at the first row of
/// each of at most 1000 bins; noise is drawn light grey.
pub fn emit_cluster_timeline(assignments: &[ClusterAssignment], periods: &[i32]) -> Artifact {
    let n = periods.len();
    let bin = n.div_ceil(TIMELINE_BINS).max(1);
    let mut strips: Vec<(String, &[i32])> = vec![("periods".into(), periods)];
    strips.extend(assignments.iter().map(|a| (a.algorithm.to_string(), a.labels())));
    let m = strips.len() as f64;
    let mut chart = Chart::new("Cluster labels over time", "row (time order)", "", (0.0, n as f64), (0.0, m));
    chart.set_y_ticks(strips.iter().enumerate().map(|(i, (name, _))| (m - i as f64 - 0.5, name.clone())).collect());
    for (i, (_, labels)) in strips.iter().enumerate() {
        let y1 = m - i as f64 - 0.1;
        let mut start = 0;
        while start < labels.len() {
            let label = labels[start];
            let mut end = start + bin;
            while end < labels.len() && labels[end] == label {
                end += bin;
            }
            let end = end.min(labels.len());
            let colour = if label < 0 { "#dddddd" } else { PALETTE[label as usize % PALETTE.len()] };
            chart.rect(start as f64, end as f64, y1 - 0.8, y1, colour);
            start = end;
        }
    }
    Artifact::new("figures/cluster_timeline.svg", chart.render())
}

/// Run provenance for `summary.txt`; `details` are extra `key: value` lines.
pub fn summary_text(seed: u64, config_hash: &str, c: &ComparisonReport, details: &[(String, String)]) -> String {
    let mut s = format!(
        "precluster {}\nseed: {seed}\nconfig_sha256: {config_hash}\n",
        env!("CARGO_PKG_VERSION")
    );
    for (k, v) in details {
        s.push_str(&format!("{k}: {v}\n"));
    }
    s.push_str(&format!("classifiers: {}\n", c.kinds.len()));
    s.push_str(&format!("mean_test_accuracy_gain: {:.6}\n", c.mean_accuracy_gain));
    match c.accuracy_test {
        Some(t) => s.push_str(&format!("paired_t_accuracy: t = {:.6}, p = {:.6}\n", t.t, t.p)),
        None => s.push_str("paired_t_accuracy: undefined\n"),
    }
    s.push_str("training-time statistics: see tables/timings.md\n");
    s
}

/// Writes every artifact atomically under `root`.
pub fn write_artifacts(root: &Path, artifacts: &[Artifact]) -> Result<()> {
    for a in artifacts {
        write_atomic(&root.join(&a.path), &a.bytes)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::evaluate;
    use crate::labels::LabelVector;

    #[test]
    fn symmetric_sample_has_t_zero() {
        let (t, p) = paired_t_test(&[-1.0, 1.0]).unwrap();
        assert_eq!(t, 0.0);
        assert!((p - 1.0).abs() < 1e-12);
        assert!(matches!(paired_t_test(&[0.5, 0.5, 0.5]), Err(Error::DegenerateStatistics(_))));
        assert!(paired_t_test(&[1.0]).is_err());
    }

    #[test]
    fn identical_pairs_gain_nothing() {
        assert_eq!(mean_accuracy_gain(&[(0.9, 0.9), (0.5, 0.5)]).unwrap(), 0.0);
        assert!(mean_accuracy_gain(&[]).is_err());
    }

    #[test]
    fn time_candidates() {
        let s = time_statistics(&[(1.0, 2.0), (3.0, 2.0)]).unwrap();
        assert!((s.mean_relative_reduction - 0.0).abs() < 1e-15);
        assert_eq!(s.total_reduction, 0.0);
        assert_eq!(s.mean_difference, 0.0);
    }

    fn report(acc: f64) -> ClassificationReport {
        let y = LabelVector::new(vec![0, 1, 1, 1]).unwrap();
        let mut r = evaluate(&y, &y).unwrap();
        r.accuracy_test = acc;
        r
    }

    #[test]
    fn empty_comparison_is_rejected() {
        assert!(compare(Vec::new()).is_err());
        let c = ComparisonReport {
            kinds: Vec::new(),
            accuracy_deltas: Vec::new(),
            time_deltas_seconds: Vec::new(),
            mean_accuracy_gain: 0.0,
            time: time_statistics(&[(1.0, 1.0)]).unwrap(),
            accuracy_test: None,
            time_test: None,
        };
        assert!(emit_tables(&c).is_err());
    }

    #[test]
    fn tables_have_two_rows_per_kind() {
        let kinds = ClassifierKind::ALL
            .iter()
            .map(|&kind| KindComparison {
                kind,
                with: report(0.9),
                without: report(0.8),
            })
            .collect();
        let c = compare(kinds).unwrap();
        assert!(c.accuracy_test.is_none());
        let t = emit_tables(&c).unwrap();
        let acc = String::from_utf8(t[0].bytes.clone()).unwrap();
        assert_eq!(acc.lines().count(), 13);
        assert!(t.iter().filter(|a| Artifact::is_timing(&a.path)).count() == 3);
    }
}
