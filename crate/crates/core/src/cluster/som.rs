//! Square-grid self-organising map with batch training, and the SOM+k-means
//! two-stage clustering.

use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::kmeans::{kmeans_plus_plus, KMeans, KMeansFit};
use super::nearest_centroid;
use crate::math::exp;
use crate::matrix::Matrix;
use crate::{Error, Result};

/// Batch SOM on an `side x side` grid.
///
/// Code vectors are seeded with k-means++ over the data. Each epoch assigns
/// every row to its best-matching unit (BMU), then moves every code vector to
/// the neighbourhood-weighted mean of the rows, with a Gaussian neighbourhood
/// whose width shrinks linearly from `sigma_start` (default `side / 2`) to
/// `sigma_end` over the epochs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Som {
    pub side: usize,
    pub epochs: usize,
    pub sigma_start: Option<f64>,
    pub sigma_end: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SomFit {
    pub side: usize,
    /// `side * side` code vectors; node `r * side + c` sits at grid (r, c).
    pub codebook: Matrix,
    pub bmu: Vec<usize>,
}

impl SomFit {
    pub fn bmu_of(&self, x: &[f64]) -> usize {
        nearest_centroid(&self.codebook, x)
    }
}

impl Som {
    pub fn new(side: usize) -> Self {
        Self {
            side,
            epochs: 10,
            sigma_start: None,
            sigma_end: 1.0,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_epochs(mut self, epochs: usize) -> Self {
        self.epochs = epochs;
        self
    }

    fn sigma(&self, epoch: usize) -> f64 {
        let start = self
            .sigma_start
            .unwrap_or(self.side as f64 / 2.0)
            .max(self.sigma_end);
        if self.epochs <= 1 {
            return start;
        }
        start + (self.sigma_end - start) * epoch as f64 / (self.epochs - 1) as f64
    }

    pub fn fit(&self, data: &Matrix) -> Result<SomFit> {
        if self.side < 2 {
            return Err(Error::Config("SOM side length must be at least 2".into()));
        }
        if data.rows() == 0 {
            return Err(Error::TooFewRows { needed: 1, got: 0 });
        }
        if !(self.sigma_end > 0.0) {
            return Err(Error::Config(
                "SOM neighbourhood width must be positive".into(),
            ));
        }
        let nodes = self.side * self.side;
        let dim = data.cols();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut codebook = kmeans_plus_plus(data, nodes, &mut rng);

        let grid_d2: Vec<f64> = (0..nodes * nodes)
            .map(|ij| {
                let (i, j) = (ij / nodes, ij % nodes);
                let dr = (i / self.side) as f64 - (j / self.side) as f64;
                let dc = (i % self.side) as f64 - (j % self.side) as f64;
                dr * dr + dc * dc
            })
            .collect();

        for epoch in 0..self.epochs {
            let sigma = self.sigma(epoch);
            let mut sums = Matrix::zeros(nodes, dim);
            let mut counts = vec![0.0f64; nodes];
            for x in data.iter_rows() {
                let b = nearest_centroid(&codebook, x);
                counts[b] += 1.0;
                for (s, v) in sums.row_mut(b).iter_mut().zip(x) {
                    *s += v;
                }
            }
            for i in 0..nodes {
                let mut denom = 0.0;
                let mut acc = vec![0.0; dim];
                for j in 0..nodes {
                    if counts[j] == 0.0 {
                        continue;
                    }
                    let h = exp(-grid_d2[i * nodes + j] / (2.0 * sigma * sigma));
                    denom += h * counts[j];
                    for (a, s) in acc.iter_mut().zip(sums.row(j)) {
                        *a += h * s;
                    }
                }
                if denom > 0.0 {
                    for (c, a) in codebook.row_mut(i).iter_mut().zip(&acc) {
                        *c = a / denom;
                    }
                }
            }
        }

        let bmu = data
            .iter_rows()
            .map(|x| nearest_centroid(&codebook, x))
            .collect();
        Ok(SomFit {
            side: self.side,
            codebook,
            bmu,
        })
    }
}

pub fn fit_som(data: &Matrix, side: usize, epochs: usize, seed: u64) -> Result<SomFit> {
    Som::new(side).with_epochs(epochs).with_seed(seed).fit(data)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SomKMeansFit {
    pub som: SomFit,
    /// k-means over the SOM code vectors.
    pub kmeans: KMeansFit,
    pub labels: Vec<usize>,
}

/// Maps the data onto a SOM, clusters the code vectors with k-means and
/// labels each row with the cluster of its BMU.
pub fn fit_som_kmeans(data: &Matrix, som: &Som, kmeans: &KMeans) -> Result<SomKMeansFit> {
    let nodes = som.side * som.side;
    if nodes <= kmeans.k {
        return Err(Error::Config(alloc::format!(
            "SOM+k-means needs side^2 > m, got side {} and m {}",
            som.side,
            kmeans.k
        )));
    }
    let som_fit = som.fit(data)?;
    let km = kmeans.fit(&som_fit.codebook)?;
    let labels = som_fit.bmu.iter().map(|&b| km.labels[b]).collect();
    Ok(SomKMeansFit {
        som: som_fit,
        kmeans: km,
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::agreement::{adjusted_rand_index, purity};
    use rand_distr::{Distribution, Normal};

    fn planted(groups: &[[f64; 3]], per: usize, sd: f64, seed: u64) -> (Matrix, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, sd).unwrap();
        let mut data = Vec::new();
        let mut truth = Vec::new();
        for (g, c) in groups.iter().enumerate() {
            for _ in 0..per {
                for v in c {
                    data.push(v + noise.sample(&mut rng));
                }
                truth.push(g);
            }
        }
        (Matrix::from_vec(truth.len(), 3, data).unwrap(), truth)
    }

    #[test]
    fn constant_data_collapses_codebook() {
        let data = Matrix::from_vec(10, 3, [1.0, 2.0, 3.0].repeat(10)).unwrap();
        let fit = fit_som(&data, 3, 10, 1).unwrap();
        for c in fit.codebook.iter_rows() {
            assert!(c
                .iter()
                .zip([1.0, 2.0, 3.0])
                .all(|(a, b)| (a - b).abs() < 1e-12));
        }
        assert!(fit.bmu.iter().all(|&b| b == fit.bmu[0]));
    }

    #[test]
    fn four_groups_on_two_by_two_grid() {
        let groups = [
            [0.0, 0.0, 0.0],
            [10.0, 0.0, 0.0],
            [0.0, 10.0, 0.0],
            [0.0, 0.0, 10.0],
        ];
        let (data, truth) = planted(&groups, 40, 0.3, 2);
        let fit = fit_som(&data, 2, 10, 5).unwrap();
        let mut used = fit.bmu.clone();
        used.sort_unstable();
        used.dedup();
        assert_eq!(used.len(), 4);
        assert!(purity(&truth, &fit.bmu) >= 0.9);
    }

    #[test]
    fn deterministic_grid() {
        let (data, _) = planted(&[[0.0; 3], [5.0; 3]], 20, 0.5, 3);
        assert_eq!(
            fit_som(&data, 3, 10, 7).unwrap(),
            fit_som(&data, 3, 10, 7).unwrap()
        );
    }

    #[test]
    fn som_kmeans_rejects_small_grid() {
        let (data, _) = planted(&[[0.0; 3]], 5, 0.1, 0);
        let err = fit_som_kmeans(&data, &Som::new(2), &KMeans::new(4)).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn som_kmeans_single_cluster() {
        let (data, _) = planted(&[[0.0; 3], [4.0; 3]], 10, 0.1, 0);
        let fit = fit_som_kmeans(&data, &Som::new(2), &KMeans::new(1)).unwrap();
        assert!(fit.labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn som_kmeans_recovers_planted_groups() {
        let groups = [[0.0, 0.0, 0.0], [8.0, 1.0, 0.0], [1.0, 0.0, 9.0]];
        let (data, truth) = planted(&groups, 60, 0.4, 11);
        let fit = fit_som_kmeans(
            &data,
            &Som::new(5).with_seed(1),
            &KMeans::new(3).with_seed(1),
        )
        .unwrap();
        assert!(adjusted_rand_index(&truth, &fit.labels) >= 0.9);
    }
}
