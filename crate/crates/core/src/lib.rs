//! Clustering-enriched fault classification for multivariate sensor data.

pub mod classify;
pub mod clustering;
pub mod clusterval;
pub mod config;
pub mod distance;
pub mod enrich;
pub mod error;
pub mod frame;
pub mod fsutil;
pub mod ingest;
pub mod labels;
pub mod matrix;
pub mod neighbors;
pub mod pipeline;
pub mod preprocess;
pub mod report;
pub mod schedule;
pub mod seed;
pub mod special;
pub mod svg;
pub mod tune;

pub use error::{Error, ErrorClass, Result};
pub use frame::SensorFrame;
pub use labels::{Algorithm, ClusterAssignment, LabelVector};
pub use matrix::Matrix;
pub use schedule::NocSchedule;
pub use seed::RunSeed;
