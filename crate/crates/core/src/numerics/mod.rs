//! Deterministic numeric kernels shared by the feature modules.
//!
//! Everything in here is pure: identical inputs (and seed, where one is
//! taken) produce bit-identical outputs.

mod dbscan;
mod geo;
mod kmeans;
mod lomb_scargle;
mod regression;
mod stats;

pub use dbscan::{dbscan, Metric};
pub use geo::{haversine_distance, GeoPoint, EARTH_RADIUS_M};
pub use kmeans::{kmeans, MAX_ITERATIONS, RESTARTS};
pub use lomb_scargle::lomb_scargle_psd;
pub use regression::{linear_fit, LinearFit};
pub use stats::{mean, pop_std, pop_variance, zscore, Summary};

use thiserror::Error;

/// Cluster id used for density-clustering noise.
pub const NOISE: i32 = -1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("input sequence is empty")]
    EmptyInput,
    #[error("only {distinct} distinct points, cannot form {k} clusters")]
    DegenerateClustering { distinct: usize, k: usize },
    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("degenerate fit: all abscissae are equal")]
    DegenerateFit,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Output of a clustering run.
///
/// `labels[i]` is the cluster of point `i`, or [`NOISE`]. `sse` is the sum of
/// squared distances of every non-noise point to its cluster center, measured
/// with the metric the clustering used.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    pub labels: Vec<i32>,
    pub centers: Vec<Vec<f64>>,
    pub sse: f64,
}

impl ClusterResult {
    pub fn empty() -> Self {
        Self {
            labels: Vec::new(),
            centers: Vec::new(),
            sse: 0.0,
        }
    }

    pub fn num_clusters(&self) -> usize {
        self.centers.len()
    }

    /// Indices of the points assigned to `cluster`.
    pub fn members(&self, cluster: usize) -> impl Iterator<Item = usize> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(move |(_, &l)| l == cluster as i32)
            .map(|(i, _)| i)
    }
}

pub(crate) fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
