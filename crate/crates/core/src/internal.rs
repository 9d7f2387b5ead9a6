//! Internal validity indices computed in the normalised clustering space.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cluster::ClusterModel;
use crate::data::ProfileDataset;
use crate::math::{distance, ln, sqrt, squared_distance};
use crate::matrix::Matrix;
use crate::preprocess::normalize;
use crate::{Error, Result, HOURS};

/// Silhouette evaluation strategy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SilhouetteConfig {
    /// Row count up to which the index is computed exactly.
    pub exact_limit: usize,
    /// Rows sampled (uniformly, without replacement) above `exact_limit`.
    pub sample_size: usize,
    pub seed: u64,
}

impl Default for SilhouetteConfig {
    fn default() -> Self {
        Self {
            exact_limit: 20_000,
            sample_size: 10_000,
            seed: 0,
        }
    }
}

/// Relabels arbitrary ids to `0..k` in ascending id order.
fn compact_labels(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut ids = labels.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let dense = labels
        .iter()
        .map(|l| ids.binary_search(l).expect("id is present"))
        .collect();
    (dense, ids.len())
}

fn check(data: &Matrix, labels: &[usize]) -> Result<()> {
    if data.rows() != labels.len() {
        return Err(Error::Dimension {
            expected: data.rows(),
            got: labels.len(),
        });
    }
    if data.rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    Ok(())
}

fn centroids(data: &Matrix, labels: &[usize], k: usize) -> (Matrix, Vec<usize>) {
    let mut c = Matrix::zeros(k, data.cols());
    let mut counts = vec![0usize; k];
    for (row, &l) in data.iter_rows().zip(labels) {
        counts[l] += 1;
        for (acc, v) in c.row_mut(l).iter_mut().zip(row) {
            *acc += v;
        }
    }
    for (l, &n) in counts.iter().enumerate() {
        c.row_mut(l).iter_mut().for_each(|v| *v /= n as f64);
    }
    (c, counts)
}

fn silhouette_of(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == 0.0 {
        0.0
    } else {
        (b - a) / m
    }
}

/// Mean silhouette over all rows, computed exactly.
///
/// Members of singleton clusters score 0.
pub fn silhouette_index(data: &Matrix, labels: &[usize]) -> Result<f64> {
    check(data, labels)?;
    let (labels, k) = compact_labels(labels);
    if k < 2 {
        return Err(Error::TooFewClusters(k));
    }
    let n = data.rows();
    let mut sizes = vec![0usize; k];
    labels.iter().for_each(|&l| sizes[l] += 1);

    // sums[i * k + c] = total distance from row i to members of cluster c.
    let mut sums = vec![0.0; n * k];
    for i in 0..n {
        let xi = data.row(i);
        for j in (i + 1)..n {
            let d = distance(xi, data.row(j));
            sums[i * k + labels[j]] += d;
            sums[j * k + labels[i]] += d;
        }
    }
    let total: f64 = (0..n)
        .map(|i| row_silhouette(&sums[i * k..(i + 1) * k], labels[i], &sizes))
        .sum();
    Ok(total / n as f64)
}

fn row_silhouette(sums: &[f64], own: usize, sizes: &[usize]) -> f64 {
    if sizes[own] == 1 {
        return 0.0;
    }
    let a = sums[own] / (sizes[own] - 1) as f64;
    let b = sums
        .iter()
        .zip(sizes)
        .enumerate()
        .filter(|&(c, (_, &size))| c != own && size > 0)
        .map(|(_, (s, &size))| s / size as f64)
        .fold(f64::INFINITY, f64::min);
    silhouette_of(a, b)
}

/// Silhouette with uniform row subsampling above `config.exact_limit`.
/// Sampled rows are scored against the full dataset.
pub fn silhouette_with(data: &Matrix, labels: &[usize], config: &SilhouetteConfig) -> Result<f64> {
    if data.rows() <= config.exact_limit || config.sample_size >= data.rows() {
        return silhouette_index(data, labels);
    }
    check(data, labels)?;
    let (labels, k) = compact_labels(labels);
    if k < 2 {
        return Err(Error::TooFewClusters(k));
    }
    let mut sizes = vec![0usize; k];
    labels.iter().for_each(|&l| sizes[l] += 1);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut sample = index::sample(&mut rng, data.rows(), config.sample_size.max(1)).into_vec();
    sample.sort_unstable();
    let mut sums = vec![0.0; k];
    let mut total = 0.0;
    for &i in &sample {
        sums.iter_mut().for_each(|s| *s = 0.0);
        let xi = data.row(i);
        for (j, &lj) in labels.iter().enumerate() {
            if j != i {
                sums[lj] += distance(xi, data.row(j));
            }
        }
        total += row_silhouette(&sums, labels[i], &sizes);
    }
    Ok(total / sample.len() as f64)
}

/// Davies-Bouldin index with dispersion taken as the mean member distance to
/// the centroid.
pub fn dbi(data: &Matrix, labels: &[usize]) -> Result<f64> {
    check(data, labels)?;
    let (labels, k) = compact_labels(labels);
    if k < 2 {
        return Err(Error::TooFewClusters(k));
    }
    let (c, counts) = centroids(data, &labels, k);
    let mut disp = vec![0.0; k];
    for (row, &l) in data.iter_rows().zip(&labels) {
        disp[l] += distance(row, c.row(l));
    }
    for (d, &n) in disp.iter_mut().zip(&counts) {
        *d /= n as f64;
    }
    let mut total = 0.0;
    for i in 0..k {
        let mut worst = 0.0f64;
        for j in 0..k {
            if i == j {
                continue;
            }
            let sep = distance(c.row(i), c.row(j));
            if sep == 0.0 {
                return Err(Error::CoincidentCentroids(i.min(j), i.max(j)));
            }
            worst = worst.max((disp[i] + disp[j]) / sep);
        }
        total += worst;
    }
    Ok(total / k as f64)
}

/// Mean index adequacy: the root mean over clusters of each cluster's mean
/// squared member distance to its centroid.
pub fn mia(data: &Matrix, labels: &[usize]) -> Result<f64> {
    check(data, labels)?;
    let (labels, k) = compact_labels(labels);
    let (c, counts) = centroids(data, &labels, k);
    let mut msd = vec![0.0; k];
    for (row, &l) in data.iter_rows().zip(&labels) {
        msd[l] += squared_distance(row, c.row(l));
    }
    let sum: f64 = msd.iter().zip(&counts).map(|(s, &n)| s / n as f64).sum();
    Ok(sqrt(sum / k as f64))
}

/// Combined index of one bin; undefined unless every component is positive.
pub fn ix_bin(dbi: f64, mia: f64, silhouette: f64) -> Option<f64> {
    (dbi > 0.0 && mia > 0.0 && silhouette > 0.0).then(|| dbi * mia / silhouette)
}

/// Natural log of the row-weighted mean `ix` over bins given as
/// `(ix, n_bin)`; undefined if any bin is.
pub fn ci_score(bins: &[(Option<f64>, usize)]) -> Option<f64> {
    let n: usize = bins.iter().map(|b| b.1).sum();
    if n == 0 {
        return None;
    }
    let mut acc = 0.0;
    for &(ix, n_bin) in bins {
        acc += ix? * n_bin as f64 / n as f64;
    }
    Some(ln(acc))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinScores {
    pub bin: usize,
    pub n_bin: usize,
    pub n_clusters: usize,
    pub dbi: Option<f64>,
    pub mia: Option<f64>,
    pub silhouette: Option<f64>,
    pub ix: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InternalScores {
    pub per_bin: Vec<BinScores>,
    pub ci: Option<f64>,
}

/// Scores one set of rows and labels as a single bin.
pub fn score_bin(
    bin: usize,
    data: &Matrix,
    labels: &[usize],
    config: &SilhouetteConfig,
) -> Result<BinScores> {
    let n_clusters = compact_labels(labels).1;
    let dbi = dbi(data, labels).ok();
    let mia = Some(mia(data, labels)?);
    let silhouette = silhouette_with(data, labels, config).ok();
    let ix = match (dbi, mia, silhouette) {
        (Some(d), Some(m), Some(s)) => ix_bin(d, m, s),
        _ => None,
    };
    Ok(BinScores {
        bin,
        n_bin: data.rows(),
        n_clusters,
        dbi,
        mia,
        silhouette,
        ix,
    })
}

/// Normalised rows as clustered by `model`; scaling failures map to zeros,
/// matching how the pipeline keeps such rows.
pub fn normalized_rows(model: &ClusterModel, dataset: &ProfileDataset, rows: &[usize]) -> Matrix {
    let mut data = Matrix::zeros(rows.len(), HOURS);
    for (i, &r) in rows.iter().enumerate() {
        let v = normalize(dataset.profiles()[r].values(), model.config.normalization)
            .unwrap_or([0.0; HOURS]);
        data.row_mut(i).copy_from_slice(&v);
    }
    data
}

/// Per-bin indices and the combined score of a fitted experiment.
pub fn evaluate_internal(
    model: &ClusterModel,
    dataset: &ProfileDataset,
    config: &SilhouetteConfig,
) -> Result<InternalScores> {
    if model.labels.len() != dataset.len() {
        return Err(Error::Dimension {
            expected: model.labels.len(),
            got: dataset.len(),
        });
    }
    let mut per_bin = Vec::with_capacity(model.bins.len());
    for b in &model.bins {
        let mut rows = Vec::with_capacity(b.n_rows);
        let mut labels = Vec::with_capacity(b.n_rows);
        for (c, members) in b.members.iter().enumerate() {
            rows.extend_from_slice(members);
            labels.extend(core::iter::repeat_n(c, members.len()));
        }
        let data = normalized_rows(model, dataset, &rows);
        per_bin.push(score_bin(b.bin, &data, &labels, config)?);
    }
    let ci = ci_score(&per_bin.iter().map(|b| (b.ix, b.n_bin)).collect::<Vec<_>>());
    Ok(InternalScores { per_bin, ci })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m1(xs: &[f64]) -> Matrix {
        Matrix::from_vec(xs.len(), 1, xs.to_vec()).unwrap()
    }

    #[test]
    fn dbi_hand_case() {
        let v = dbi(&m1(&[0.0, 2.0, 10.0, 12.0]), &[0, 0, 1, 1]).unwrap();
        assert!((v - 0.2).abs() < 1e-12);
    }

    #[test]
    fn dbi_singletons_and_scale() {
        assert_eq!(dbi(&m1(&[0.0, 5.0]), &[3, 7]).unwrap(), 0.0);
        let a = dbi(&m1(&[0.0, 1.0, 3.0, 7.0, 8.0]), &[0, 0, 1, 1, 1]).unwrap();
        let b = dbi(&m1(&[0.0, 2.5, 7.5, 17.5, 20.0]), &[0, 0, 1, 1, 1]).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn dbi_coincident_centroids() {
        let err = dbi(&m1(&[0.0, 2.0, 1.0, 1.0]), &[0, 0, 1, 1]).unwrap_err();
        assert_eq!(err, Error::CoincidentCentroids(0, 1));
    }

    #[test]
    fn mia_cases() {
        assert_eq!(mia(&m1(&[3.0, 3.0, 5.0]), &[0, 0, 1]).unwrap(), 0.0);
        assert!((mia(&m1(&[0.0, 2.0]), &[0, 0]).unwrap() - 1.0).abs() < 1e-12);
        let a = mia(&m1(&[0.0, 1.0, 4.0, 9.0]), &[0, 0, 1, 1]).unwrap();
        let b = mia(&m1(&[0.0, 3.0, 12.0, 27.0]), &[0, 0, 1, 1]).unwrap();
        assert!((3.0 * a - b).abs() < 1e-12);
    }

    #[test]
    fn silhouette_cases() {
        let s = silhouette_index(&m1(&[0.0, 0.01, 100.0, 100.01]), &[0, 0, 1, 1]).unwrap();
        assert!(s >= 0.99);
        assert_eq!(
            silhouette_index(&m1(&[1.0; 4]), &[0, 0, 1, 1]).unwrap(),
            0.0
        );
        assert_eq!(
            silhouette_index(&m1(&[1.0, 2.0]), &[0, 0]).unwrap_err(),
            Error::TooFewClusters(1)
        );
    }

    #[test]
    fn silhouette_six_point_hand_value() {
        // Clusters {0, 1, 3} and {7, 9}, plus the singleton {20}.
        let x = [0.0, 1.0, 3.0, 7.0, 9.0, 20.0];
        let l = [0, 0, 0, 1, 1, 2];
        let s = |a: f64, b: f64| (b - a) / a.max(b);
        let expected = [
            s(2.0, 8.0),
            s(1.5, 7.0),
            s(2.5, 5.0),
            s(2.0, 17.0 / 3.0),
            s(2.0, 23.0 / 3.0),
            0.0,
        ];
        let mean = expected.iter().sum::<f64>() / 6.0;
        assert!((silhouette_index(&m1(&x), &l).unwrap() - mean).abs() < 1e-12);
    }

    #[test]
    fn subsampled_silhouette_close_to_exact() {
        let xs: Vec<f64> = (0..400)
            .map(|i| (i % 4) as f64 * 10.0 + (i as f64) * 1e-3)
            .collect();
        let labels: Vec<usize> = (0..400).map(|i| i % 4).collect();
        let exact = silhouette_index(&m1(&xs), &labels).unwrap();
        let cfg = SilhouetteConfig {
            exact_limit: 100,
            sample_size: 200,
            seed: 3,
        };
        let approx = silhouette_with(&m1(&xs), &labels, &cfg).unwrap();
        assert!((exact - approx).abs() < 0.01);
    }

    #[test]
    fn ix_and_ci() {
        assert_eq!(ix_bin(1.0, 1.0, 1.0), Some(1.0));
        assert_eq!(ix_bin(2.0, 0.5, 0.25), Some(4.0));
        assert_eq!(ix_bin(1.0, 1.0, -0.1), None);
        assert_eq!(ix_bin(0.0, 1.0, 0.5), None);
        assert_eq!(ci_score(&[(Some(1.0), 10)]), Some(0.0));
        assert!((ci_score(&[(Some(core::f64::consts::E), 5)]).unwrap() - 1.0).abs() < 1e-15);
        let two = ci_score(&[(Some(2.0), 100), (Some(4.0), 300)]).unwrap();
        assert!((two - ln(3.5)).abs() < 1e-12);
        assert_eq!(ci_score(&[(Some(2.0), 100), (None, 300)]), None);
        assert!(ci_score(&[(Some(0.5), 1)]).unwrap() < 0.0);
    }
}
