//! Clustering engines and the per-experiment pipeline.

pub mod agreement;
mod experiment;
pub mod kmeans;
pub mod som;

pub use experiment::{
    build_rdlps, prepare, run_experiment, Algorithm, BinModel, ClusterModel, ExperimentConfig,
    KMeansParams, Prepared, Rdlp, SomParams,
};
pub use kmeans::{fit_kmeans, KMeans, KMeansFit};
pub use som::{fit_som, fit_som_kmeans, Som, SomFit, SomKMeansFit};

use crate::math::squared_distance;
use crate::matrix::Matrix;

/// Index of the nearest centroid by Euclidean distance; lowest index wins ties.
pub fn nearest_centroid(centroids: &Matrix, x: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in centroids.iter_rows().enumerate() {
        let d = squared_distance(x, c);
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    best
}
