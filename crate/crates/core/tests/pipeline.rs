use std::path::Path;

use precluster::config::PipelineConfig;
use precluster::pipeline::{list_files, load_runs, run_all, stage_cluster, stage_preprocess, stage_synth, stage_tune, stage_validate, RunOptions};
use precluster::report::Artifact;
use precluster::{Error, ErrorClass};

fn small(out: &Path, seed: u64) -> PipelineConfig {
    let mut cfg = PipelineConfig::from_toml(
        r#"
[synth]
n_rows = 3000
abnormal_windows = [[400, 650], [1300, 1550], [2200, 2450]]

[tune]
subset_fractions = [0.3]

[classifier]
gbm_stages = 20
rf_trees = 20

[classify]
folds = 3
"#,
    )
    .unwrap();
    cfg.seed = seed;
    cfg.output_dir = out.to_path_buf();
    cfg
}

#[test]
fn defaults_carry_the_reference_constants() {
    let cfg = PipelineConfig::default();
    assert_eq!(cfg.preprocess.corr_threshold, 0.8);
    assert_eq!(cfg.preprocess.anova_alpha, 0.05);
    assert_eq!(cfg.tune.subset_fractions, vec![0.1, 0.2, 0.3]);
    assert_eq!(cfg.classify.folds, 5);
    assert_eq!(cfg.classify.test_fraction, 0.25);
    assert_eq!(cfg.classify.kinds.len(), 6);
    assert_eq!(PipelineConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    assert_eq!(PipelineConfig::from_toml("").unwrap(), cfg);
}

#[test]
fn unknown_keys_are_rejected() {
    for text in ["sed = 4", "[preprocess]\ncorr_treshold = 0.7", "[nonsense]\nx = 1"] {
        let e = PipelineConfig::from_toml(text).unwrap_err();
        assert_eq!(e.class(), ErrorClass::Config, "{text}: {e}");
    }
    assert!(PipelineConfig::from_toml("[preprocess]\ncorr_threshold = 1.5").is_err());
}

#[test]
fn tune_without_preprocess_is_missing_input() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), 1);
    let e = stage_tune(&cfg).unwrap_err();
    assert!(matches!(e, Error::MissingInput { .. }), "{e}");
    assert_eq!(e.class(), ErrorClass::Data);
}

#[test]
fn stages_chain_through_persisted_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), 2);
    stage_synth(&cfg).unwrap();
    stage_preprocess(&cfg).unwrap();
    let t = stage_tune(&cfg).unwrap();
    assert!(t.chosen_k >= 2);
    let assignments = stage_cluster(&cfg).unwrap();
    assert!(assignments.iter().all(|a| a.len() == 3000));
    let selected = stage_validate(&cfg).unwrap();
    assert!((3..=6).contains(&selected.len()));
    assert!(dir.path().join("validate/selected.csv").exists());
}

fn deterministic_files(root: &Path) -> Vec<(std::path::PathBuf, Vec<u8>)> {
    list_files(root)
        .unwrap()
        .into_iter()
        .filter(|p| !Artifact::is_timing(p))
        .map(|p| {
            let bytes = std::fs::read(root.join(&p)).unwrap();
            (p, bytes)
        })
        .collect()
}

#[test]
fn run_all_is_reproducible_apart_from_timings() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ca = run_all(&small(a.path(), 5), RunOptions::default()).unwrap();
    let cb = run_all(&small(b.path(), 5), RunOptions::default()).unwrap();
    assert_eq!(ca.accuracy_deltas, cb.accuracy_deltas);
    let (fa, fb) = (deterministic_files(a.path()), deterministic_files(b.path()));
    assert_eq!(fa.iter().map(|f| &f.0).collect::<Vec<_>>(), fb.iter().map(|f| &f.0).collect::<Vec<_>>());
    for ((p, x), (_, y)) in fa.iter().zip(&fb) {
        assert!(x == y, "{} differs", p.display());
    }
    // Timing files exist, and nothing else mentions seconds.
    let all = list_files(a.path()).unwrap();
    assert!(all.iter().any(|p| p.ends_with("train/timings.csv")));
    let runs = std::fs::read_to_string(a.path().join("train/runs.csv")).unwrap();
    assert_eq!(
        runs.lines().next().unwrap(),
        "kind,enriched,fold,acc_train,acc_test,recall_macro,recall_weighted,f1_macro,f1_weighted,fp,fn,tp,tn"
    );
    // 6 kinds x 2 variants x (3 folds + holdout).
    assert_eq!(load_runs(&small(a.path(), 5)).unwrap().len(), 48);
    let c = run_all(&small(a.path(), 6), RunOptions::default()).unwrap();
    assert_ne!(c.accuracy_deltas, ca.accuracy_deltas);
}
