//! The six compared clustering algorithms plus DBSCAN.

pub mod birch;
pub mod dbscan;
pub mod gmm;
pub mod hdbscan;
pub mod kmeans;
pub mod meanshift;
pub mod optics;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use birch::birch;
pub use dbscan::dbscan;
pub use gmm::gmm_em;
pub use hdbscan::hdbscan;
pub use kmeans::kmeans;
pub use meanshift::mean_shift_adaptive;
pub use optics::optics;

use crate::error::{Error, Result};
use crate::labels::{Algorithm, ClusterAssignment};
use crate::matrix::Matrix;
use crate::seed::RunSeed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClusterParams {
    /// DBSCAN density threshold (also used by the ε sweep).
    pub dbscan_min_pts: usize,
    pub hdbscan_min_cluster_size: usize,
    pub hdbscan_min_samples: usize,
    pub optics_min_pts: usize,
    pub optics_xi: f64,
    pub birch_branching_factor: usize,
    pub birch_threshold: f64,
    pub msams_k_bandwidth: usize,
    /// Overrides the tuned k when set.
    pub k: Option<usize>,
    /// Overrides the tuned ε when set.
    pub epsilon: Option<f64>,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self {
            dbscan_min_pts: 5,
            hdbscan_min_cluster_size: 25,
            hdbscan_min_samples: 10,
            optics_min_pts: 5,
            optics_xi: 0.05,
            birch_branching_factor: 50,
            birch_threshold: 0.5,
            msams_k_bandwidth: 50,
            k: None,
            epsilon: None,
        }
    }
}

impl ClusterParams {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.dbscan_min_pts >= 1, "dbscan_min_pts must be at least 1"),
            (self.hdbscan_min_cluster_size >= 2, "hdbscan_min_cluster_size must be at least 2"),
            (self.hdbscan_min_samples >= 1, "hdbscan_min_samples must be at least 1"),
            (self.optics_min_pts >= 2, "optics_min_pts must be at least 2"),
            (self.optics_xi > 0.0 && self.optics_xi < 1.0, "optics_xi must lie in (0, 1)"),
            (self.birch_branching_factor >= 2, "birch_branching_factor must be at least 2"),
            (self.birch_threshold >= 0.0, "birch_threshold must be non-negative"),
            (self.msams_k_bandwidth >= 1, "msams_k_bandwidth must be at least 1"),
            (self.k.is_none_or(|k| k >= 1), "k must be at least 1"),
            (self.epsilon.is_none_or(|e| e > 0.0), "epsilon must be positive"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(Error::Parameter((*msg).into())),
            None => Ok(()),
        }
    }
}

/// Runs one algorithm with the shared parameters.
pub fn run_one(algorithm: Algorithm, x: &Matrix, k: usize, epsilon: f64, p: &ClusterParams, seed: RunSeed) -> Result<ClusterAssignment> {
    match algorithm {
        Algorithm::KMeans => kmeans(x, k, seed).map(|r| r.1),
        Algorithm::Gmm => gmm_em(x, k, seed).map(|r| r.1),
        Algorithm::Hdbscan => hdbscan(x, p.hdbscan_min_cluster_size, p.hdbscan_min_samples).map(|r| r.1),
        Algorithm::Optics => optics(x, p.optics_min_pts, p.optics_xi).map(|r| r.1),
        Algorithm::Birch => birch(x, p.birch_branching_factor, p.birch_threshold, k, seed),
        Algorithm::MsAms => mean_shift_adaptive(x, p.msams_k_bandwidth, seed),
        Algorithm::Dbscan => dbscan(x, epsilon, p.dbscan_min_pts),
    }
}

#[derive(Debug, Clone)]
pub struct RunAllOutput {
    pub k: usize,
    pub epsilon: f64,
    /// Successful assignments in [`Algorithm::COMPARED`] order.
    pub assignments: Vec<ClusterAssignment>,
    pub failures: Vec<(Algorithm, String)>,
}

/// Runs the six compared algorithms. A failing algorithm is logged and
/// skipped. ε is recorded for provenance; none of the six consumes it
/// (OPTICS orders with ε = ∞).
pub fn run_all(x: &Matrix, k: usize, epsilon: f64, p: &ClusterParams, seed: RunSeed) -> Result<RunAllOutput> {
    p.validate()?;
    let k = p.k.unwrap_or(k);
    let epsilon = p.epsilon.unwrap_or(epsilon);
    log::info!("clustering with k = {k}, epsilon = {epsilon}");
    let results: Vec<(Algorithm, Result<ClusterAssignment>)> = Algorithm::COMPARED
        .par_iter()
        .map(|&a| (a, run_one(a, x, k, epsilon, p, seed)))
        .collect();
    let mut out = RunAllOutput {
        k,
        epsilon,
        assignments: Vec::new(),
        failures: Vec::new(),
    };
    for (a, r) in results {
        match r {
            Ok(assignment) => {
                log::info!(
                    "{a}: {} clusters{} in {:.3}s",
                    assignment.n_clusters(),
                    if assignment.has_noise() { " + noise" } else { "" },
                    assignment.fit_seconds
                );
                out.assignments.push(assignment);
            }
            Err(e) => {
                log::warn!("{a} failed: {e}");
                out.failures.push((a, e.to_string()));
            }
        }
    }
    Ok(out)
}
