//! Lloyd's k-means with k-means++ seeding.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::nearest_centroid;
use crate::math::squared_distance;
use crate::matrix::Matrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeans {
    pub k: usize,
    pub max_iter: usize,
    /// Relative inertia change below which iteration stops.
    pub tol: f64,
    pub n_init: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub centroids: Matrix,
    pub labels: Vec<usize>,
    pub inertia: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Inertia after the seeding assignment and after every Lloyd step.
    pub inertia_trace: Vec<f64>,
}

impl KMeansFit {
    pub fn nearest(&self, x: &[f64]) -> usize {
        nearest_centroid(&self.centroids, x)
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.centroids.rows()];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

impl KMeans {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            max_iter: 300,
            tol: 1e-6,
            n_init: 1,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_n_init(mut self, n_init: usize) -> Self {
        self.n_init = n_init.max(1);
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn fit(&self, data: &Matrix) -> Result<KMeansFit> {
        if self.k == 0 {
            return Err(Error::Config("k-means needs k >= 1".into()));
        }
        if data.rows() < self.k {
            return Err(Error::TooFewRows {
                needed: self.k,
                got: data.rows(),
            });
        }
        if data.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::Config(
                "k-means input contains non-finite values".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut best: Option<KMeansFit> = None;
        for _ in 0..self.n_init.max(1) {
            let seeds = kmeans_plus_plus(data, self.k, &mut rng);
            let fit = self.lloyd(data, seeds);
            if best.as_ref().is_none_or(|b| fit.inertia < b.inertia) {
                best = Some(fit);
            }
        }
        Ok(best.expect("n_init >= 1"))
    }

    fn lloyd(&self, data: &Matrix, mut centroids: Matrix) -> KMeansFit {
        let mut labels = assign(data, &centroids);
        let mut inertia = inertia_of(data, &centroids, &labels);
        let mut trace = vec![inertia];
        let mut converged = false;
        let mut iterations = 0;
        while iterations < self.max_iter {
            iterations += 1;
            update_centroids(data, &labels, &mut centroids);
            let next = assign(data, &centroids);
            let next_inertia = inertia_of(data, &centroids, &next);
            trace.push(next_inertia);
            let stable = next == labels;
            let small_change =
                inertia <= 0.0 || (inertia - next_inertia).abs() <= self.tol * inertia;
            labels = next;
            inertia = next_inertia;
            if stable || small_change {
                converged = true;
                break;
            }
        }
        KMeansFit {
            centroids,
            labels,
            inertia,
            iterations,
            converged,
            inertia_trace: trace,
        }
    }
}

pub fn fit_kmeans(data: &Matrix, m: usize, seed: u64) -> Result<KMeansFit> {
    KMeans::new(m).with_seed(seed).fit(data)
}

/// k-means++ seeding. When every remaining point coincides with a chosen
/// seed, further seeds are drawn uniformly.
pub(crate) fn kmeans_plus_plus(data: &Matrix, k: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let n = data.rows();
    let mut centroids = Matrix::zeros(k, data.cols());
    let first = rng.random_range(0..n);
    centroids.row_mut(0).copy_from_slice(data.row(first));
    let mut d2: Vec<f64> = data
        .iter_rows()
        .map(|x| squared_distance(x, data.row(first)))
        .collect();
    // Greedy variant: draw several D^2-weighted candidates per step and keep
    // the one that lowers the potential the most.
    let trials = 2 + libm::log(k as f64) as usize;
    let mut best_d2 = vec![0.0; n];
    let mut cand_d2 = vec![0.0; n];
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        if total <= 0.0 {
            let pick = rng.random_range(0..n);
            centroids.row_mut(c).copy_from_slice(data.row(pick));
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for _ in 0..trials {
            let cand = sample_weighted(&d2, total, rng);
            let mut potential = 0.0;
            for (i, x) in data.iter_rows().enumerate() {
                let d = squared_distance(x, data.row(cand)).min(d2[i]);
                cand_d2[i] = d;
                potential += d;
            }
            if best.is_none_or(|(_, p)| potential < p) {
                best = Some((cand, potential));
                core::mem::swap(&mut best_d2, &mut cand_d2);
            }
        }
        let (pick, _) = best.expect("at least two trials");
        centroids.row_mut(c).copy_from_slice(data.row(pick));
        core::mem::swap(&mut d2, &mut best_d2);
    }
    centroids
}

fn sample_weighted(weights: &[f64], total: f64, rng: &mut ChaCha8Rng) -> usize {
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if *w > 0.0 && acc > target {
            return i;
        }
    }
    weights.iter().rposition(|w| *w > 0.0).expect("total > 0")
}

fn assign(data: &Matrix, centroids: &Matrix) -> Vec<usize> {
    data.iter_rows()
        .map(|x| nearest_centroid(centroids, x))
        .collect()
}

fn inertia_of(data: &Matrix, centroids: &Matrix, labels: &[usize]) -> f64 {
    data.iter_rows()
        .zip(labels)
        .map(|(x, &l)| squared_distance(x, centroids.row(l)))
        .sum()
}

/// Moves every centroid to the mean of its members. A centroid left without
/// members is relocated onto the point farthest from its own centroid.
fn update_centroids(data: &Matrix, labels: &[usize], centroids: &mut Matrix) {
    let k = centroids.rows();
    let d = data.cols();
    let mut sums = Matrix::zeros(k, d);
    let mut counts = vec![0usize; k];
    for (x, &l) in data.iter_rows().zip(labels) {
        counts[l] += 1;
        for (s, v) in sums.row_mut(l).iter_mut().zip(x) {
            *s += v;
        }
    }
    for (c, &count) in counts.iter().enumerate() {
        if count > 0 {
            let n = count as f64;
            for (dst, s) in centroids.row_mut(c).iter_mut().zip(sums.row(c)) {
                *dst = s / n;
            }
        }
    }
    if counts.iter().all(|&c| c > 0) {
        return;
    }
    let mut far: Vec<(f64, usize)> = data
        .iter_rows()
        .zip(labels)
        .enumerate()
        .map(|(i, (x, &l))| (squared_distance(x, centroids.row(l)), i))
        .collect();
    far.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut next = far.into_iter();
    for (c, _) in counts.iter().enumerate().filter(|(_, &n)| n == 0) {
        if let Some((_, i)) = next.next() {
            centroids.row_mut(c).copy_from_slice(data.row(i));
        }
    }
}
