use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::kmeans::KMeans;
use super::som::{fit_som_kmeans, Som};
use crate::data::{compute_all_amc, ProfileDataset};
use crate::matrix::Matrix;
use crate::preprocess::{
    assign_amc_bins, filter_zeros, integral_kmeans_bins_with, normalize, AmcBinRanges,
    BinAssignment, BinScheme, Normalization,
};
use crate::{Error, Result, HOURS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Kmeans,
    Som,
    SomKmeans,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Kmeans => "kmeans",
            Algorithm::Som => "som",
            Algorithm::SomKmeans => "som_kmeans",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KMeansParams {
    pub n_init: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for KMeansParams {
    fn default() -> Self {
        Self {
            n_init: 1,
            max_iter: 300,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SomParams {
    pub epochs: usize,
    pub sigma_end: f64,
}

impl Default for SomParams {
    fn default() -> Self {
        Self {
            epochs: 10,
            sigma_end: 1.0,
        }
    }
}

fn default_integral_bins() -> usize {
    8
}

/// One clustering run: algorithm, its parameters and the preprocessing chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    /// Cluster count for k-means (per bin).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    /// SOM side length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
    pub normalization: Normalization,
    pub prebinning: BinScheme,
    pub keep_zeros: bool,
    pub seed: u64,
    #[serde(default = "default_integral_bins")]
    pub integral_bins: usize,
    #[serde(default)]
    pub amc_ranges: AmcBinRanges,
    #[serde(default)]
    pub kmeans: KMeansParams,
    #[serde(default)]
    pub som: SomParams,
}

impl ExperimentConfig {
    pub fn kmeans(
        m: usize,
        normalization: Normalization,
        prebinning: BinScheme,
        keep_zeros: bool,
        seed: u64,
    ) -> Self {
        Self {
            algorithm: Algorithm::Kmeans,
            m: Some(m),
            s: None,
            normalization,
            prebinning,
            keep_zeros,
            seed,
            integral_bins: default_integral_bins(),
            amc_ranges: AmcBinRanges::default(),
            kmeans: KMeansParams::default(),
            som: SomParams::default(),
        }
    }

    pub fn som(
        s: usize,
        normalization: Normalization,
        prebinning: BinScheme,
        keep_zeros: bool,
        seed: u64,
    ) -> Self {
        Self {
            algorithm: Algorithm::Som,
            m: None,
            s: Some(s),
            ..Self::kmeans(2, normalization, prebinning, keep_zeros, seed)
        }
    }

    pub fn som_kmeans(
        s: usize,
        m: usize,
        normalization: Normalization,
        prebinning: BinScheme,
        keep_zeros: bool,
        seed: u64,
    ) -> Self {
        Self {
            algorithm: Algorithm::SomKmeans,
            m: Some(m),
            s: Some(s),
            ..Self::kmeans(m, normalization, prebinning, keep_zeros, seed)
        }
    }

    pub fn with_integral_bins(mut self, n: usize) -> Self {
        self.integral_bins = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |msg: alloc::string::String| Err(Error::Config(msg));
        let needs_m = matches!(self.algorithm, Algorithm::Kmeans | Algorithm::SomKmeans);
        let needs_s = matches!(self.algorithm, Algorithm::Som | Algorithm::SomKmeans);
        match (needs_m, self.m) {
            (true, None) => return cfg(format!("{} requires m", self.algorithm)),
            (true, Some(m)) if m < 2 => return cfg(format!("m must be at least 2, got {m}")),
            _ => {}
        }
        match (needs_s, self.s) {
            (true, None) => return cfg(format!("{} requires s", self.algorithm)),
            (true, Some(s)) if s < 2 => return cfg(format!("s must be at least 2, got {s}")),
            _ => {}
        }
        if self.algorithm == Algorithm::SomKmeans {
            let (s, m) = (self.s.unwrap_or(0), self.m.unwrap_or(0));
            if s * s <= m {
                return cfg(format!("som_kmeans requires s^2 > m, got s = {s}, m = {m}"));
            }
        }
        if self.prebinning == BinScheme::IntegralKmeans && self.integral_bins == 0 {
            return cfg("integral k-means pre-binning needs at least one bin".into());
        }
        if self.kmeans.n_init == 0 || self.som.epochs == 0 {
            return cfg("n_init and epochs must be positive".into());
        }
        self.amc_ranges.validate()
    }
}

/// Normalised rows and their bins, the input actually clustered.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    /// Normalised values of every dataset row; `None` for dropped rows.
    pub values: Vec<Option<[f64; HOURS]>>,
    /// Bin of every dataset row; `None` for dropped rows.
    pub bins: Vec<Option<usize>>,
    pub n_bins: usize,
    pub removed_zero: usize,
    pub removed_degenerate: usize,
}

impl Prepared {
    /// Kept rows of each bin, indexed by `bin - 1`.
    pub fn bin_rows(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_bins];
        for (row, b) in self.bins.iter().enumerate() {
            if let Some(b) = b {
                out[b - 1].push(row);
            }
        }
        out
    }

    pub fn matrix(&self, rows: &[usize]) -> Matrix {
        Matrix::from_rows(
            HOURS,
            rows.iter()
                .map(|&r| &self.values[r].as_ref().expect("row is kept")[..]),
        )
        .expect("rows have HOURS columns")
    }
}

/// Applies zero filtering, normalisation and pre-binning.
///
/// Profiles that normalisation cannot scale are kept as all-zero vectors when
/// `keep_zeros` is set and dropped otherwise.
pub fn prepare(dataset: &ProfileDataset, config: &ExperimentConfig) -> Result<Prepared> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let filtered = filter_zeros(dataset, config.keep_zeros);
    let mut values: Vec<Option<[f64; HOURS]>> = vec![None; dataset.len()];
    let mut removed_degenerate = 0;
    for (p, &row) in filtered.dataset.profiles().iter().zip(&filtered.kept_rows) {
        match normalize(p.values(), config.normalization) {
            Ok(v) => values[row] = Some(v),
            Err(Error::DegenerateProfile(_)) if config.keep_zeros => {
                values[row] = Some([0.0; HOURS])
            }
            Err(Error::DegenerateProfile(_)) => removed_degenerate += 1,
            Err(e) => return Err(e),
        }
    }
    let kept: Vec<usize> = (0..dataset.len())
        .filter(|&r| values[r].is_some())
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let assignment = match config.prebinning {
        BinScheme::None => BinAssignment::single(kept.len()),
        BinScheme::Amc => {
            let stats = compute_all_amc(dataset);
            assign_amc_bins(&subset(dataset, &kept), &stats, &config.amc_ranges)?
        }
        BinScheme::IntegralKmeans => integral_kmeans_bins_with(
            &subset(dataset, &kept),
            &KMeans {
                k: config.integral_bins,
                max_iter: config.kmeans.max_iter,
                tol: config.kmeans.tol,
                n_init: config.kmeans.n_init,
                seed: config.seed,
            },
        )?,
    };
    let mut bins = vec![None; dataset.len()];
    for (&row, &b) in kept.iter().zip(&assignment.labels) {
        bins[row] = Some(b);
    }
    Ok(Prepared {
        values,
        bins,
        n_bins: assignment.n_bins,
        removed_zero: filtered.removed,
        removed_degenerate,
    })
}

fn subset(dataset: &ProfileDataset, rows: &[usize]) -> ProfileDataset {
    ProfileDataset::new(
        rows.iter()
            .map(|&r| dataset.profiles()[r].clone())
            .collect(),
    )
}

/// Clusters of one bin, in the normalised space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinModel {
    pub bin: usize,
    pub n_rows: usize,
    /// Global id of this bin's first cluster.
    pub first_cluster: usize,
    pub centroids: Matrix,
    /// Dataset rows of each cluster.
    pub members: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub config: ExperimentConfig,
    pub bins: Vec<BinModel>,
    /// Global cluster of every dataset row; `None` for dropped rows.
    pub labels: Vec<Option<usize>>,
    pub removed_zero: usize,
    pub removed_degenerate: usize,
}

impl ClusterModel {
    pub fn n_clusters(&self) -> usize {
        self.bins.iter().map(|b| b.members.len()).sum()
    }

    /// Dataset rows of every global cluster.
    pub fn cluster_members(&self) -> Vec<&[usize]> {
        self.bins
            .iter()
            .flat_map(|b| b.members.iter().map(Vec::as_slice))
            .collect()
    }

    pub fn clustered_rows(&self) -> usize {
        self.labels.iter().filter(|l| l.is_some()).count()
    }

    /// Bin and local cluster index of a global cluster id.
    pub fn locate(&self, cluster: usize) -> Option<(usize, usize)> {
        self.bins.iter().enumerate().find_map(|(bi, b)| {
            (cluster >= b.first_cluster && cluster < b.first_cluster + b.members.len())
                .then(|| (bi, cluster - b.first_cluster))
        })
    }
}

fn bin_seed(seed: u64, bin: usize) -> u64 {
    seed.wrapping_add((bin as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Fits the configured algorithm independently inside every bin and merges
/// the per-bin clusters into globally unique, dense cluster ids. Bins with
/// fewer rows than `m` are fitted with as many clusters as they have rows.
pub fn run_experiment(dataset: &ProfileDataset, config: &ExperimentConfig) -> Result<ClusterModel> {
    let prepared = prepare(dataset, config)?;
    let mut labels = vec![None; dataset.len()];
    let mut bins = Vec::new();
    let mut next_cluster = 0;
    for (bi, rows) in prepared.bin_rows().into_iter().enumerate() {
        if rows.is_empty() {
            continue;
        }
        let data = prepared.matrix(&rows);
        let seed = bin_seed(config.seed, bi);
        let kmeans = |m: usize| KMeans {
            k: m.min(rows.len()),
            max_iter: config.kmeans.max_iter,
            tol: config.kmeans.tol,
            n_init: config.kmeans.n_init,
            seed,
        };
        let som = |s: usize| Som {
            side: s,
            epochs: config.som.epochs,
            sigma_start: None,
            sigma_end: config.som.sigma_end,
            seed,
        };
        let (local, centroids) = match config.algorithm {
            Algorithm::Kmeans => {
                let fit = kmeans(config.m.expect("validated")).fit(&data)?;
                (fit.labels, fit.centroids)
            }
            Algorithm::Som => {
                let fit = som(config.s.expect("validated")).fit(&data)?;
                (fit.bmu, fit.codebook)
            }
            Algorithm::SomKmeans => {
                let fit = fit_som_kmeans(
                    &data,
                    &som(config.s.expect("validated")),
                    &kmeans(config.m.expect("validated")),
                )?;
                (fit.labels, fit.kmeans.centroids)
            }
        };

        // Compact to the non-empty clusters, keeping their order.
        let mut members = vec![Vec::new(); centroids.rows()];
        for (&row, &l) in rows.iter().zip(&local) {
            members[l].push(row);
        }
        let used: Vec<usize> = (0..centroids.rows())
            .filter(|&c| !members[c].is_empty())
            .collect();
        let centroids = centroids.select_rows(&used);
        let members: Vec<Vec<usize>> = used
            .iter()
            .map(|&c| core::mem::take(&mut members[c]))
            .collect();
        for (c, ms) in members.iter().enumerate() {
            for &row in ms {
                labels[row] = Some(next_cluster + c);
            }
        }
        bins.push(BinModel {
            bin: bi + 1,
            n_rows: rows.len(),
            first_cluster: next_cluster,
            centroids,
            members,
        });
        next_cluster += used.len();
    }
    Ok(ClusterModel {
        config: config.clone(),
        bins,
        labels,
        removed_zero: prepared.removed_zero,
        removed_degenerate: prepared.removed_degenerate,
    })
}

/// Representative daily load profile: the mean of the raw member profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rdlp {
    pub cluster: usize,
    pub values: [f64; HOURS],
    pub member_count: usize,
}

pub fn build_rdlps(model: &ClusterModel, dataset: &ProfileDataset) -> Vec<Rdlp> {
    model
        .cluster_members()
        .into_iter()
        .enumerate()
        .filter(|(_, rows)| !rows.is_empty())
        .map(|(cluster, rows)| {
            let mut values = [0.0; HOURS];
            for &r in rows {
                for (acc, v) in values.iter_mut().zip(dataset.profiles()[r].values()) {
                    *acc += v;
                }
            }
            let n = rows.len() as f64;
            values.iter_mut().for_each(|v| *v /= n);
            Rdlp {
                cluster,
                values,
                member_count: rows.len(),
            }
        })
        .collect()
}
