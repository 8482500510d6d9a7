use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const NORMAL: u8 = 1;
pub const ABNORMAL: u8 = 0;

/// Label reserved for points no cluster claims.
pub const NOISE: i32 = -1;

/// Per-row binary class: 1 = NORMAL, 0 = ABNORMAL.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelVector(Vec<u8>);

impl LabelVector {
    pub fn new(labels: Vec<u8>) -> Result<Self> {
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::Parameter(format!("class labels must be 0 or 1, got {bad}")));
        }
        Ok(Self(labels))
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `[abnormal count, normal count]`
    pub fn counts(&self) -> [usize; 2] {
        let normal = self.0.iter().filter(|&&l| l == NORMAL).count();
        [self.0.len() - normal, normal]
    }

    pub fn select(&self, rows: &[usize]) -> LabelVector {
        LabelVector(rows.iter().map(|&i| self.0[i]).collect())
    }
}

impl From<LabelVector> for Vec<u8> {
    fn from(l: LabelVector) -> Self {
        l.0
    }
}

/// Clustering algorithms known to the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    KMeans,
    Hdbscan,
    Optics,
    Birch,
    Gmm,
    MsAms,
    Dbscan,
}

impl Algorithm {
    /// The six algorithms compared against the NoC periods, in reporting
    /// order; this order also breaks ranking ties.
    pub const COMPARED: [Algorithm; 6] = [
        Algorithm::KMeans,
        Algorithm::Hdbscan,
        Algorithm::Optics,
        Algorithm::Birch,
        Algorithm::Gmm,
        Algorithm::MsAms,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::KMeans => "KMEANS",
            Algorithm::Gmm => "GMM",
            Algorithm::Hdbscan => "HDBSCAN",
            Algorithm::Dbscan => "DBSCAN",
            Algorithm::Optics => "OPTICS",
            Algorithm::Birch => "BIRCH",
            Algorithm::MsAms => "MSAMS",
        }
    }

    /// Lower-case stem used in generated column names.
    pub fn column_stem(self) -> String {
        self.name().to_ascii_lowercase()
    }

    /// Position in [`Algorithm::COMPARED`]; DBSCAN sorts last.
    pub fn tie_rank(self) -> usize {
        Self::COMPARED.iter().position(|&a| a == self).unwrap_or(Self::COMPARED.len())
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace(['-', '_'], "").as_str() {
            "KMEANS" => Ok(Algorithm::KMeans),
            "GMM" => Ok(Algorithm::Gmm),
            "HDBSCAN" => Ok(Algorithm::Hdbscan),
            "DBSCAN" => Ok(Algorithm::Dbscan),
            "OPTICS" | "OPTIC" => Ok(Algorithm::Optics),
            "BIRCH" => Ok(Algorithm::Birch),
            "MSAMS" | "MEANSHIFT" => Ok(Algorithm::MsAms),
            _ => Err(Error::Parameter(format!("unknown clustering algorithm `{s}`"))),
        }
    }
}

/// Per-row cluster labels produced by one algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    pub algorithm: Algorithm,
    labels: Vec<i32>,
    pub params: BTreeMap<String, f64>,
    pub fit_seconds: f64,
}

impl ClusterAssignment {
    /// Compacts non-noise labels to `0..m` (order preserving). Labels below
    /// `-1` are rejected.
    pub fn new(algorithm: Algorithm, labels: Vec<i32>, params: BTreeMap<String, f64>) -> Result<Self> {
        if let Some(bad) = labels.iter().find(|&&l| l < NOISE) {
            return Err(Error::Parameter(format!("cluster label {bad} is below the noise label")));
        }
        Ok(Self {
            algorithm,
            labels: compact_labels(&labels),
            params,
            fit_seconds: 0.0,
        })
    }

    pub fn labels(&self) -> &[i32] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_clusters(&self) -> usize {
        self.labels.iter().copied().max().map_or(0, |m| (m + 1).max(0) as usize)
    }

    pub fn has_noise(&self) -> bool {
        self.labels.contains(&NOISE)
    }

    pub fn with_fit_seconds(mut self, secs: f64) -> Self {
        self.fit_seconds = secs;
        self
    }
}

/// Maps the distinct non-noise labels onto `0..m`, preserving their order.
pub fn compact_labels(labels: &[i32]) -> Vec<i32> {
    let distinct: BTreeSet<i32> = labels.iter().copied().filter(|&l| l != NOISE).collect();
    let map: BTreeMap<i32, i32> = distinct.into_iter().zip(0..).collect();
    labels
        .iter()
        .map(|l| if *l == NOISE { NOISE } else { map[l] })
        .collect()
}
