//! Declarative run configuration (TOML). Every section and key is optional
//! and falls back to the documented default; unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classify::{ClassifierKind, ClassifierParams};
use crate::clustering::ClusterParams;
use crate::clusterval::NmiNorm;
use crate::enrich::Encoding;
use crate::error::{Error, Result};
use crate::ingest::SynthConfig;
use crate::labels::Algorithm;
use crate::preprocess::PreprocessParams;
use crate::tune::TuneParams;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InputConfig {
    /// When both are unset the synthetic generator is used.
    pub sensor_csv: Option<PathBuf>,
    pub noc_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidationConfig {
    pub nmi_norm: NmiNorm,
    /// Replaces the top-three selection, e.g. `["HDBSCAN", "GMM"]`.
    pub selected: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnrichConfig {
    pub encoding: Encoding,
    pub smote: bool,
    pub smote_k: usize,
}

impl Default for EnrichConfig {
    fn default() -> Self {
        Self {
            encoding: Encoding::OneHot,
            smote: true,
            smote_k: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifyConfig {
    pub kinds: Vec<ClassifierKind>,
    /// Cross-validation folds on the training partition; 0 skips CV.
    pub folds: usize,
    pub test_fraction: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            kinds: ClassifierKind::ALL.to_vec(),
            folds: 5,
            test_fraction: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub input: InputConfig,
    pub synth: SynthConfig,
    pub preprocess: PreprocessParams,
    pub tune: TuneParams,
    pub cluster: ClusterParams,
    pub validation: ValidationConfig,
    pub enrich: EnrichConfig,
    pub classify: ClassifyConfig,
    pub classifier: ClassifierParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            output_dir: PathBuf::from("out"),
            input: InputConfig::default(),
            synth: SynthConfig::default(),
            preprocess: PreprocessParams::default(),
            tune: TuneParams::default(),
            cluster: ClusterParams::default(),
            validation: ValidationConfig::default(),
            enrich: EnrichConfig::default(),
            classify: ClassifyConfig::default(),
            classifier: ClassifierParams::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().replace('\n', " ")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&crate::fsutil::read_to_string(path)?).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always serializable")
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |e: Error| Error::Config(e.to_string());
        if self.input.sensor_csv.is_some() != self.input.noc_csv.is_some() {
            return Err(Error::Config("input.sensor_csv and input.noc_csv must be given together".into()));
        }
        self.synth.validate().map_err(cfg)?;
        self.preprocess.validate().map_err(cfg)?;
        self.tune.validate().map_err(cfg)?;
        self.cluster.validate().map_err(cfg)?;
        self.classifier.validate().map_err(cfg)?;
        self.selected_override()?;
        if self.enrich.smote_k == 0 {
            return Err(Error::Config("enrich.smote_k must be at least 1".into()));
        }
        if self.classify.kinds.is_empty() {
            return Err(Error::Config("classify.kinds must not be empty".into()));
        }
        if self.classify.folds == 1 {
            return Err(Error::Config("classify.folds must be 0 (no cross-validation) or at least 2".into()));
        }
        if !(self.classify.test_fraction > 0.0 && self.classify.test_fraction < 1.0) {
            return Err(Error::Config("classify.test_fraction must lie in (0, 1)".into()));
        }
        Ok(())
    }

    pub fn selected_override(&self) -> Result<Option<Vec<Algorithm>>> {
        self.validation
            .selected
            .as_ref()
            .map(|names| {
                names
                    .iter()
                    .map(|n| n.parse().map_err(|e: Error| Error::Config(e.to_string())))
                    .collect::<Result<Vec<Algorithm>>>()
            })
            .transpose()
    }

    pub fn smote_k(&self) -> Option<usize> {
        self.enrich.smote.then_some(self.enrich.smote_k)
    }

    /// SHA-256 of the canonical serialization, ignoring the output directory
    /// so that identical runs written to different places hash equally.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        Sha256::digest(c.to_toml().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = PipelineConfig::from_toml("").unwrap();
        assert_eq!(c, PipelineConfig::default());
        assert_eq!(c.preprocess.corr_threshold, 0.8);
        assert_eq!(c.classify.folds, 5);
        assert_eq!(c.classify.test_fraction, 0.25);
        assert_eq!(c.tune.subset_fractions, vec![0.1, 0.2, 0.3]);
    }

    #[test]
    fn unknown_keys_are_errors() {
        assert!(matches!(PipelineConfig::from_toml("sede = 1"), Err(Error::Config(_))));
        assert!(matches!(
            PipelineConfig::from_toml("[preprocess]\ncorr_treshold = 0.5"),
            Err(Error::Config(_))
        ));
        assert!(matches!(PipelineConfig::from_toml("[nope]"), Err(Error::Config(_))));
    }

    #[test]
    fn round_trip_and_overrides() {
        let text = "seed = 7\n[classify]\nkinds = [\"lr\", \"knn\"]\nfolds = 0\n[validation]\nselected = [\"gmm\", \"HDBSCAN\"]\n[classifier]\nknn_k = 3\n";
        let c = PipelineConfig::from_toml(text).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.classify.kinds, vec![ClassifierKind::LogisticRegression, ClassifierKind::Knn]);
        assert_eq!(c.selected_override().unwrap(), Some(vec![Algorithm::Gmm, Algorithm::Hdbscan]));
        assert_eq!(c.classifier.knn_k, 3);
        assert_eq!(PipelineConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(PipelineConfig::from_toml("[classify]\nfolds = 1").is_err());
        assert!(PipelineConfig::from_toml("[validation]\nselected = [\"spectral\"]").is_err());
        assert!(PipelineConfig::from_toml("[input]\nsensor_csv = \"a.csv\"").is_err());
    }

    #[test]
    fn hash_ignores_output_dir() {
        let a = PipelineConfig::default();
        let mut b = a.clone();
        b.output_dir = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.seed += 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
