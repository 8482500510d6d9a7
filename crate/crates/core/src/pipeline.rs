//! The staged pipeline. Each stage reads the artifacts persisted by the
//! previous ones under the output directory and writes its own atomically:
//!
//! ```text
//! synth/       sensor.csv noc.csv
//! preprocess/  frame.csv noc.csv features.csv standardizer.csv
//! tune/        chosen.csv kdistance.csv knees.csv silhouette_epsilon.csv silhouette_k.csv
//! cluster/     assignments.csv params.csv failures.csv timings.csv
//! validate/    validation.csv validation.md selected.csv
//! train/       enriched.csv runs.csv timings.csv
//! report/      tables/ figures/ summary.txt
//! ```
//!
//! Wall-clock measurements only ever appear in files named `timings*`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::classify::cv::fit_and_score;
use crate::classify::{cross_validate, train_test_split, ClassificationReport, ClassifierKind};
use crate::clustering;
use crate::clusterval;
use crate::config::PipelineConfig;
use crate::enrich::augment_with;
use crate::error::{Error, Result};
use crate::frame::SensorFrame;
use crate::fsutil::{fmt_f64, read_to_string, write_atomic};
use crate::ingest::{self, generate_synthetic};
use crate::labels::{Algorithm, ClusterAssignment, LabelVector};
use crate::preprocess::{label_from_noc, preprocess};
use crate::report::{self, ComparisonReport, KindComparison};
use crate::schedule::NocSchedule;
use crate::seed::RunSeed;
use crate::tune::{SubsetTune, TuneResult};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Fit classifiers one at a time so their timings are comparable.
    pub sequential_timing: bool,
}

struct Stage {
    dir: PathBuf,
    name: &'static str,
}

impl Stage {
    fn new(cfg: &PipelineConfig, name: &'static str) -> Self {
        Self {
            dir: cfg.output_dir.join(name),
            name,
        }
    }

    fn path(&self, file: &str) -> PathBuf {
        self.dir.join(file)
    }

    fn write(&self, file: &str, text: &str) -> Result<()> {
        write_atomic(&self.path(file), text.as_bytes())
    }

    /// Reads an artifact, naming the subcommand that produces it when absent.
    fn read(&self, file: &str) -> Result<String> {
        let path = self.path(file);
        if !path.exists() {
            return Err(Error::MissingInput {
                path,
                hint: format!("run the `{}` stage first", self.name.replace('_', "-")),
            });
        }
        read_to_string(&path)
    }

    fn table(&self, file: &str) -> Result<Vec<Vec<String>>> {
        let text = self.read(file)?;
        let path = self.path(file);
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        rdr.records()
            .map(|r| {
                r.map(|rec| rec.iter().map(str::to_string).collect())
                    .map_err(|e| Error::format(path.display(), e.position().map_or(0, |p| p.line() as usize), e.to_string()))
            })
            .collect()
    }
}

fn field<T: std::str::FromStr>(file: &str, row: usize, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::format(file, row + 2, format!("cannot parse field `{v}`")))
}

fn seed_of(cfg: &PipelineConfig) -> RunSeed {
    RunSeed(cfg.seed)
}

pub fn stage_synth(cfg: &PipelineConfig) -> Result<()> {
    let (frame, noc) = generate_synthetic(&cfg.synth, seed_of(cfg).derive("synth", 0))?;
    let st = Stage::new(cfg, "synth");
    st.write("sensor.csv", &ingest::sensor_csv_string(&frame, &[])?)?;
    st.write("noc.csv", &ingest::noc_csv_string(&noc))?;
    log::info!("synth: {} rows x {} channels, {} NoC intervals", frame.n_rows(), frame.n_features(), noc.intervals().len());
    Ok(())
}

fn load_raw(cfg: &PipelineConfig) -> Result<(SensorFrame, NocSchedule)> {
    match (&cfg.input.sensor_csv, &cfg.input.noc_csv) {
        (Some(s), Some(n)) => Ok((ingest::read_sensor_csv(s)?, ingest::read_noc_csv(n)?)),
        _ => {
            let st = Stage::new(cfg, "synth");
            let sensor = st.read("sensor.csv")?;
            let noc = st.read("noc.csv")?;
            Ok((
                ingest::parse_sensor_csv(&sensor, &st.path("sensor.csv"))?,
                ingest::parse_noc_csv(&noc, &st.path("noc.csv"))?,
            ))
        }
    }
}

pub fn stage_preprocess(cfg: &PipelineConfig) -> Result<()> {
    let (raw, noc) = load_raw(cfg)?;
    let p = preprocess(&raw, &noc, &cfg.preprocess)?;
    let st = Stage::new(cfg, "preprocess");
    st.write("frame.csv", &ingest::sensor_csv_string(&p.frame, &[])?)?;
    st.write("noc.csv", &ingest::noc_csv_string(&noc))?;
    st.write("features.csv", &p.report.to_csv())?;
    st.write("standardizer.csv", &p.standardizer.to_csv())?;
    let [abnormal, normal] = p.labels.counts();
    log::info!(
        "preprocess: dropped {} rows, kept {:?}; {normal} NORMAL / {abnormal} ABNORMAL",
        p.rows_dropped,
        p.report.kept_names()
    );
    Ok(())
}

/// Standardized frame, schedule and NoC-derived labels.
pub fn load_preprocessed(cfg: &PipelineConfig) -> Result<(SensorFrame, NocSchedule, LabelVector)> {
    let st = Stage::new(cfg, "preprocess");
    let frame = ingest::parse_sensor_csv(&st.read("frame.csv")?, &st.path("frame.csv"))?;
    let noc = ingest::parse_noc_csv(&st.read("noc.csv")?, &st.path("noc.csv"))?;
    let labels = label_from_noc(&frame, &noc);
    Ok((frame, noc, labels))
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_else(|| "NaN".into())
}

fn parse_opt(file: &str, row: usize, v: &str) -> Result<Option<f64>> {
    let x: f64 = field(file, row, v)?;
    Ok(x.is_finite().then_some(x))
}

pub fn stage_tune(cfg: &PipelineConfig) -> Result<TuneResult> {
    let (frame, _, _) = load_preprocessed(cfg)?;
    let t = crate::tune::tune(&frame, &cfg.tune, seed_of(cfg).derive("tune", 0))?;
    let st = Stage::new(cfg, "tune");
    st.write(
        "chosen.csv",
        &format!("parameter,value\nepsilon,{}\nk,{}\n", fmt_f64(t.chosen_epsilon), t.chosen_k),
    )?;
    let mut kd = String::from("fraction,n_rows,index,value\n");
    let mut knees = String::from("fraction,n_rows,knee_index,knee_epsilon\n");
    let mut se = String::from("fraction,epsilon,silhouette\n");
    let mut sk = String::from("fraction,k,silhouette\n");
    for s in &t.subsets {
        let f = fmt_f64(s.fraction);
        for (i, v) in s.kdist_curve.iter().enumerate() {
            kd.push_str(&format!("{f},{},{i},{}\n", s.n_rows, fmt_f64(*v)));
        }
        match s.knee {
            Some((i, e)) => knees.push_str(&format!("{f},{},{i},{}\n", s.n_rows, fmt_f64(e))),
            None => knees.push_str(&format!("{f},{},,\n", s.n_rows)),
        }
        for (e, v) in &s.silhouette_vs_epsilon {
            se.push_str(&format!("{f},{},{}\n", fmt_f64(*e), opt_f64(*v)));
        }
        for (k, v) in &s.silhouette_vs_k {
            sk.push_str(&format!("{f},{k},{}\n", opt_f64(*v)));
        }
    }
    st.write("kdistance.csv", &kd)?;
    st.write("knees.csv", &knees)?;
    st.write("silhouette_epsilon.csv", &se)?;
    st.write("silhouette_k.csv", &sk)?;
    log::info!("tune: chosen epsilon {}, k {}", t.chosen_epsilon, t.chosen_k);
    Ok(t)
}

pub fn load_tune(cfg: &PipelineConfig) -> Result<TuneResult> {
    let st = Stage::new(cfg, "tune");
    let chosen = st.table("chosen.csv")?;
    let get = |name: &str| {
        chosen
            .iter()
            .position(|r| r[0] == name)
            .ok_or_else(|| Error::format("chosen.csv", 0, format!("missing `{name}`")))
    };
    let ie = get("epsilon")?;
    let ik = get("k")?;
    let chosen_epsilon = field("chosen.csv", ie, &chosen[ie][1])?;
    let chosen_k = field("chosen.csv", ik, &chosen[ik][1])?;

    let mut subsets: Vec<SubsetTune> = Vec::new();
    for (i, r) in st.table("knees.csv")?.iter().enumerate() {
        let knee = if r[2].is_empty() {
            None
        } else {
            Some((field("knees.csv", i, &r[2])?, field("knees.csv", i, &r[3])?))
        };
        subsets.push(SubsetTune {
            fraction: field("knees.csv", i, &r[0])?,
            n_rows: field("knees.csv", i, &r[1])?,
            kdist_curve: Vec::new(),
            knee,
            silhouette_vs_epsilon: Vec::new(),
            silhouette_vs_k: Vec::new(),
        });
    }
    let find = |subsets: &[SubsetTune], file: &str, row: usize, v: &str| -> Result<usize> {
        let f: f64 = field(file, row, v)?;
        subsets
            .iter()
            .position(|s| s.fraction == f)
            .ok_or_else(|| Error::format(file, row + 2, format!("unknown subset fraction {f}")))
    };
    for (i, r) in st.table("kdistance.csv")?.iter().enumerate() {
        let s = find(&subsets, "kdistance.csv", i, &r[0])?;
        subsets[s].kdist_curve.push(field("kdistance.csv", i, &r[3])?);
    }
    for (i, r) in st.table("silhouette_epsilon.csv")?.iter().enumerate() {
        let s = find(&subsets, "silhouette_epsilon.csv", i, &r[0])?;
        let pair = (field("silhouette_epsilon.csv", i, &r[1])?, parse_opt("silhouette_epsilon.csv", i, &r[2])?);
        subsets[s].silhouette_vs_epsilon.push(pair);
    }
    for (i, r) in st.table("silhouette_k.csv")?.iter().enumerate() {
        let s = find(&subsets, "silhouette_k.csv", i, &r[0])?;
        let pair = (field("silhouette_k.csv", i, &r[1])?, parse_opt("silhouette_k.csv", i, &r[2])?);
        subsets[s].silhouette_vs_k.push(pair);
    }
    Ok(TuneResult {
        subsets,
        chosen_epsilon,
        chosen_k,
    })
}

pub fn stage_cluster(cfg: &PipelineConfig) -> Result<Vec<ClusterAssignment>> {
    let (frame, _, _) = load_preprocessed(cfg)?;
    let t = load_tune(cfg)?;
    let out = clustering::run_all(frame.values(), t.chosen_k, t.chosen_epsilon, &cfg.cluster, seed_of(cfg).derive("cluster", 0))?;
    let mut labels = String::from("row_index,algorithm,label\n");
    let mut params = format!("algorithm,param,value\n*,k,{}\n*,epsilon,{}\n", out.k, fmt_f64(out.epsilon));
    let mut timings = String::from("algorithm,fit_seconds\n");
    for a in &out.assignments {
        for (i, l) in a.labels().iter().enumerate() {
            labels.push_str(&format!("{i},{},{l}\n", a.algorithm));
        }
        for (k, v) in &a.params {
            params.push_str(&format!("{},{k},{}\n", a.algorithm, fmt_f64(*v)));
        }
        timings.push_str(&format!("{},{}\n", a.algorithm, fmt_f64(a.fit_seconds)));
    }
    let mut failures = String::from("algorithm,error\n");
    for (a, e) in &out.failures {
        failures.push_str(&format!("{a},\"{}\"\n", e.replace('"', "'")));
    }
    let st = Stage::new(cfg, "cluster");
    st.write("assignments.csv", &labels)?;
    st.write("params.csv", &params)?;
    st.write("failures.csv", &failures)?;
    st.write("timings.csv", &timings)?;
    Ok(out.assignments)
}

pub fn load_assignments(cfg: &PipelineConfig) -> Result<Vec<ClusterAssignment>> {
    let st = Stage::new(cfg, "cluster");
    let mut params: BTreeMap<Algorithm, BTreeMap<String, f64>> = BTreeMap::new();
    for (i, r) in st.table("params.csv")?.iter().enumerate() {
        if r[0] != "*" {
            let a: Algorithm = r[0].parse()?;
            params.entry(a).or_default().insert(r[1].clone(), field("params.csv", i, &r[2])?);
        }
    }
    let mut order: Vec<Algorithm> = Vec::new();
    let mut labels: BTreeMap<Algorithm, Vec<i32>> = BTreeMap::new();
    for (i, r) in st.table("assignments.csv")?.iter().enumerate() {
        let a: Algorithm = r[1].parse()?;
        let v = labels.entry(a).or_insert_with(|| {
            order.push(a);
            Vec::new()
        });
        if field::<usize>("assignments.csv", i, &r[0])? != v.len() {
            return Err(Error::format("assignments.csv", i + 2, "rows out of order"));
        }
        v.push(field("assignments.csv", i, &r[2])?);
    }
    order
        .into_iter()
        .map(|a| ClusterAssignment::new(a, labels.remove(&a).unwrap_or_default(), params.remove(&a).unwrap_or_default()))
        .collect()
}

pub fn stage_validate(cfg: &PipelineConfig) -> Result<Vec<Algorithm>> {
    let (frame, noc, labels) = load_preprocessed(cfg)?;
    let assignments = load_assignments(cfg)?;
    if assignments.is_empty() {
        return Err(Error::InsufficientData("no clustering produced an assignment".into()));
    }
    let periods = clusterval::period_labels(&frame, &noc);
    let binary: Vec<i32> = labels.as_slice().iter().map(|&l| l as i32).collect();
    let rows = clusterval::validate(&assignments, &periods, &binary, cfg.validation.nmi_norm)?;
    let selected = match cfg.selected_override()? {
        Some(list) => {
            if let Some(missing) = list.iter().find(|a| !assignments.iter().any(|x| x.algorithm == **a)) {
                return Err(Error::Config(format!("selected algorithm {missing} has no clustering result")));
            }
            let mut list = list;
            list.sort_by_key(|a| a.tie_rank());
            list.dedup();
            list
        }
        None => rows.iter().filter(|v| v.selected).map(|v| v.algorithm).collect(),
    };
    let st = Stage::new(cfg, "validate");
    st.write("validation.csv", &clusterval::validation_csv(&rows))?;
    st.write("validation.md", &clusterval::validation_markdown(&rows))?;
    let mut sel = String::from("algorithm\n");
    for a in &selected {
        sel.push_str(&format!("{a}\n"));
    }
    st.write("selected.csv", &sel)?;
    log::info!("validate: selected {selected:?}");
    Ok(selected)
}

fn load_selected(cfg: &PipelineConfig) -> Result<Vec<Algorithm>> {
    Stage::new(cfg, "validate").table("selected.csv")?.iter().map(|r| r[0].parse()).collect()
}

/// One fitted configuration: a kind, with or without cluster features, on a
/// CV fold or the hold-out split (`fold = None`).
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub kind: ClassifierKind,
    pub enriched: bool,
    pub fold: Option<usize>,
    pub report: ClassificationReport,
}

const RUNS_HEADER: &str = "kind,enriched,fold,acc_train,acc_test,recall_macro,recall_weighted,f1_macro,f1_weighted,fp,fn,tp,tn\n";

fn fold_name(fold: Option<usize>) -> String {
    fold.map_or_else(|| "holdout".into(), |f| f.to_string())
}

fn kind_index(kind: ClassifierKind) -> u64 {
    ClassifierKind::ALL.iter().position(|&k| k == kind).unwrap_or(0) as u64
}

pub fn stage_train(cfg: &PipelineConfig, opts: RunOptions) -> Result<Vec<RunRecord>> {
    let (frame, _, labels) = load_preprocessed(cfg)?;
    let assignments = load_assignments(cfg)?;
    let selected = load_selected(cfg)?;
    let chosen: Vec<ClusterAssignment> = assignments.into_iter().filter(|a| selected.contains(&a.algorithm)).collect();
    if chosen.is_empty() {
        log::warn!("train: no clustering selected; the enriched runs equal the baseline");
    }
    let enriched = augment_with(&frame, &chosen, cfg.enrich.encoding)?;
    let st = Stage::new(cfg, "train");
    st.write("enriched.csv", &ingest::sensor_csv_string(&enriched.frame, &enriched.provenance_comments())?)?;

    let seed = seed_of(cfg);
    let (train_idx, test_idx) = train_test_split(&labels, cfg.classify.test_fraction, seed.derive("split", 0))?;
    let y_train = labels.select(&train_idx);
    let base = frame.values();
    let full = enriched.frame.values();
    let jobs: Vec<(ClassifierKind, bool)> = cfg.classify.kinds.iter().flat_map(|&k| [(k, true), (k, false)]).collect();
    let smote_k = cfg.smote_k();
    let parallel = !opts.sequential_timing;
    let run = |&(kind, with): &(ClassifierKind, bool)| -> Result<Vec<RunRecord>> {
        let x = if with { full } else { base };
        let ki = kind_index(kind);
        let mut out = Vec::new();
        if cfg.classify.folds >= 2 {
            let cv = cross_validate(
                kind,
                &x.select_rows(&train_idx),
                &y_train,
                cfg.classify.folds,
                &cfg.classifier,
                smote_k,
                seed.derive("cv", ki),
                parallel,
            )?;
            out.extend(cv.folds.into_iter().enumerate().map(|(f, report)| RunRecord {
                kind,
                enriched: with,
                fold: Some(f),
                report,
            }));
        }
        let report = fit_and_score(kind, x, &labels, &train_idx, &test_idx, &cfg.classifier, smote_k, seed.derive("holdout", ki))?;
        log::info!(
            "train: {kind} {} test accuracy {:.4}",
            if with { "with clusters" } else { "baseline" },
            report.accuracy_test
        );
        out.push(RunRecord {
            kind,
            enriched: with,
            fold: None,
            report,
        });
        Ok(out)
    };
    let records: Vec<RunRecord> = if parallel {
        jobs.par_iter().map(run).collect::<Result<Vec<_>>>()?
    } else {
        jobs.iter().map(run).collect::<Result<Vec<_>>>()?
    }
    .into_iter()
    .flatten()
    .collect();

    let mut runs = String::from(RUNS_HEADER);
    let mut timings = String::from("kind,enriched,fold,train_seconds\n");
    for r in &records {
        let p = &r.report;
        runs.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.kind,
            r.enriched,
            fold_name(r.fold),
            fmt_f64(p.accuracy_train),
            fmt_f64(p.accuracy_test),
            fmt_f64(p.recall_macro),
            fmt_f64(p.recall_weighted),
            fmt_f64(p.f1_macro),
            fmt_f64(p.f1_weighted),
            p.fp(),
            p.fn_(),
            p.confusion[0][0],
            p.confusion[1][1]
        ));
        timings.push_str(&format!("{},{},{},{}\n", r.kind, r.enriched, fold_name(r.fold), fmt_f64(p.train_seconds)));
    }
    st.write("runs.csv", &runs)?;
    st.write("timings.csv", &timings)?;
    Ok(records)
}

pub fn load_runs(cfg: &PipelineConfig) -> Result<Vec<RunRecord>> {
    let st = Stage::new(cfg, "train");
    let mut secs: BTreeMap<(String, String, String), f64> = BTreeMap::new();
    for (i, r) in st.table("timings.csv")?.iter().enumerate() {
        secs.insert((r[0].clone(), r[1].clone(), r[2].clone()), field("timings.csv", i, &r[3])?);
    }
    let mut out = Vec::new();
    for (i, r) in st.table("runs.csv")?.iter().enumerate() {
        if r.len() != 13 {
            return Err(Error::format("runs.csv", i + 2, "expected 13 fields"));
        }
        let n = |k: usize| field::<usize>("runs.csv", i, &r[k]);
        // confusion[true][pred]: fp = [1][0], fn = [0][1], tp = [0][0], tn = [1][1].
        let mut report = ClassificationReport::from_confusion([[n(11)?, n(10)?], [n(9)?, n(12)?]]);
        report.accuracy_train = field("runs.csv", i, &r[3])?;
        report.train_seconds = *secs
            .get(&(r[0].clone(), r[1].clone(), r[2].clone()))
            .ok_or_else(|| Error::format("timings.csv", 0, format!("no timing for {} {} {}", r[0], r[1], r[2])))?;
        out.push(RunRecord {
            kind: r[0].parse()?,
            enriched: field("runs.csv", i, &r[1])?,
            fold: if r[2] == "holdout" { None } else { Some(field("runs.csv", i, &r[2])?) },
            report,
        });
    }
    Ok(out)
}

/// Hold-out test scores, with training accuracy and time averaged over the
/// CV folds when there are any (otherwise taken from the hold-out fit).
pub fn summarize_runs(records: &[RunRecord], kind: ClassifierKind, enriched: bool) -> Result<ClassificationReport> {
    let mine: Vec<&RunRecord> = records.iter().filter(|r| r.kind == kind && r.enriched == enriched).collect();
    let holdout = mine
        .iter()
        .find(|r| r.fold.is_none())
        .ok_or_else(|| Error::InsufficientData(format!("no hold-out run for {kind} (enriched = {enriched})")))?;
    let folds: Vec<ClassificationReport> = mine.iter().filter(|r| r.fold.is_some()).map(|r| r.report.clone()).collect();
    let mut out = holdout.report.clone();
    if !folds.is_empty() {
        let mean = ClassificationReport::mean(&folds)?;
        out.accuracy_train = mean.accuracy_train;
        out.train_seconds = mean.train_seconds;
    }
    Ok(out)
}

pub fn stage_compare(cfg: &PipelineConfig) -> Result<ComparisonReport> {
    let records = load_runs(cfg)?;
    let mut kinds: Vec<ClassifierKind> = Vec::new();
    for r in &records {
        if !kinds.contains(&r.kind) {
            kinds.push(r.kind);
        }
    }
    let pairs = kinds
        .iter()
        .map(|&kind| {
            Ok(KindComparison {
                kind,
                with: summarize_runs(&records, kind, true)?,
                without: summarize_runs(&records, kind, false)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let comparison = report::compare(pairs)?;

    let (frame, noc, _) = load_preprocessed(cfg)?;
    let tune = load_tune(cfg)?;
    let assignments = load_assignments(cfg)?;
    let selected = load_selected(cfg)?;
    let validation = Stage::new(cfg, "validate");
    let periods = clusterval::period_labels(&frame, &noc);

    let mut artifacts = report::emit_tables(&comparison)?;
    artifacts.push(report::Artifact {
        path: "tables/clustering.csv".into(),
        bytes: validation.read("validation.csv")?.into_bytes(),
    });
    artifacts.push(report::Artifact {
        path: "tables/clustering.md".into(),
        bytes: validation.read("validation.md")?.into_bytes(),
    });
    artifacts.extend(report::emit_comparison_figures(&comparison));
    artifacts.extend(report::emit_tuning_figures(&tune));
    artifacts.push(report::emit_cluster_timeline(&assignments, &periods));
    let names = |v: &[Algorithm]| v.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" ");
    let details = vec![
        ("rows".to_string(), frame.n_rows().to_string()),
        ("features".to_string(), frame.feature_names().join(" ")),
        ("chosen_k".to_string(), tune.chosen_k.to_string()),
        ("chosen_epsilon".to_string(), format!("{}", tune.chosen_epsilon)),
        ("selected_clusterings".to_string(), names(&selected)),
        ("folds".to_string(), cfg.classify.folds.to_string()),
        ("test_fraction".to_string(), format!("{}", cfg.classify.test_fraction)),
        ("smote".to_string(), cfg.smote_k().map_or("off".into(), |k| format!("k = {k}"))),
    ];
    artifacts.push(report::Artifact {
        path: "summary.txt".into(),
        bytes: report::summary_text(cfg.seed, &cfg.hash(), &comparison, &details).into_bytes(),
    });
    report::write_artifacts(&cfg.output_dir.join("report"), &artifacts)?;
    log::info!(
        "compare: mean test-accuracy gain {:.4}, p = {:?}",
        comparison.mean_accuracy_gain,
        comparison.accuracy_test.map(|t| t.p)
    );
    Ok(comparison)
}

/// Every stage in order; the synthetic generator runs only when no input
/// files are configured.
pub fn run_all(cfg: &PipelineConfig, opts: RunOptions) -> Result<ComparisonReport> {
    if cfg.input.sensor_csv.is_none() {
        stage_synth(cfg)?;
    }
    stage_preprocess(cfg)?;
    stage_tune(cfg)?;
    stage_cluster(cfg)?;
    stage_validate(cfg)?;
    stage_train(cfg, opts)?;
    stage_compare(cfg)
}

/// Relative paths of every regular file under `root`, sorted.
pub fn list_files(root: &Path) -> Result<Vec<PathBuf>> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
        for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
            let path = entry.map_err(|e| Error::io(dir, e))?.path();
            if path.is_dir() {
                walk(root, &path, out)?;
            } else {
                out.push(path.strip_prefix(root).expect("walk stays under root").to_path_buf());
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(root, root, &mut out)?;
    out.sort();
    Ok(out)
}
