//! Per-profile normalisation, zero-row filtering and demand pre-binning.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cluster::kmeans::KMeans;
use crate::data::{DailyLoadProfile, HouseholdId, HouseholdStats, ProfileDataset};
use crate::math::l2_norm;
use crate::matrix::Matrix;
use crate::{Error, Result, HOURS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    None,
    /// `y / ||y||_2`
    Unit,
    /// `(y - min y) / ||y - min y||_2`
    Deminning,
    /// `y / max y`
    ZeroOne,
    /// `y / mean y`
    SaNorm,
}

impl Normalization {
    pub const ALL: [Normalization; 5] = [
        Normalization::None,
        Normalization::Unit,
        Normalization::Deminning,
        Normalization::ZeroOne,
        Normalization::SaNorm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Normalization::None => "none",
            Normalization::Unit => "unit",
            Normalization::Deminning => "deminning",
            Normalization::ZeroOne => "zero_one",
            Normalization::SaNorm => "sa_norm",
        }
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::Vocabulary {
                kind: "normalisation",
                value: s.into(),
            })
    }
}

fn scaled(
    values: &[f64; HOURS],
    offset: f64,
    denom: f64,
    method: Normalization,
) -> Result<[f64; HOURS]> {
    if !(denom > 0.0) || !denom.is_finite() {
        return Err(Error::DegenerateProfile(method.as_str()));
    }
    let mut out = [0.0; HOURS];
    for (o, v) in out.iter_mut().zip(values) {
        *o = (v - offset) / denom;
    }
    Ok(out)
}

/// Normalises one profile. All-zero vectors (and, for de-minning, constant
/// vectors) have no defined scale and are reported as degenerate.
pub fn normalize(values: &[f64; HOURS], method: Normalization) -> Result<[f64; HOURS]> {
    match method {
        Normalization::None => Ok(*values),
        Normalization::Unit => scaled(values, 0.0, l2_norm(values), method),
        Normalization::Deminning => {
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            let mut shifted = *values;
            shifted.iter_mut().for_each(|v| *v -= min);
            scaled(values, min, l2_norm(&shifted), method)
        }
        Normalization::ZeroOne => {
            let max = values.iter().copied().fold(0.0, f64::max);
            scaled(values, 0.0, max, method)
        }
        Normalization::SaNorm => {
            let mean = values.iter().sum::<f64>() / HOURS as f64;
            scaled(values, 0.0, mean, method)
        }
    }
}

#[derive(Debug, Clone)]
pub struct FilteredDataset {
    pub dataset: ProfileDataset,
    /// Original row of each kept row.
    pub kept_rows: Vec<usize>,
    pub removed: usize,
}

/// Drops all-zero profiles unless `keep_zeros` is set.
pub fn filter_zeros(dataset: &ProfileDataset, keep_zeros: bool) -> FilteredDataset {
    if keep_zeros {
        return FilteredDataset {
            dataset: dataset.clone(),
            kept_rows: (0..dataset.len()).collect(),
            removed: 0,
        };
    }
    let (filtered, kept_rows) = dataset.filter(|p| !p.is_zero());
    FilteredDataset {
        removed: dataset.len() - filtered.len(),
        dataset: filtered,
        kept_rows,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinScheme {
    None,
    Amc,
    IntegralKmeans,
}

impl BinScheme {
    pub fn as_str(self) -> &'static str {
        match self {
            BinScheme::None => "none",
            BinScheme::Amc => "amc",
            BinScheme::IntegralKmeans => "integral_kmeans",
        }
    }
}

impl fmt::Display for BinScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinAssignment {
    pub scheme: BinScheme,
    pub n_bins: usize,
    /// 1-based bin of every row.
    pub labels: Vec<usize>,
}

impl BinAssignment {
    pub fn single(n_rows: usize) -> Self {
        Self {
            scheme: BinScheme::None,
            n_bins: 1,
            labels: alloc::vec![1; n_rows],
        }
    }

    /// Rows of each bin, indexed by `bin - 1`.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = alloc::vec![Vec::new(); self.n_bins];
        for (row, &bin) in self.labels.iter().enumerate() {
            out[bin - 1].push(row);
        }
        out
    }
}

/// Upper edges (exclusive, kWh) of every AMC bin except the last, which is
/// open-ended. The defaults reproduce the tariff-aligned table
/// 0-1, 2-50, 51-150, 151-400, 401-600, 601-1200, 1201-2500, 2501-4000 kWh
/// with the integer labels widened to half-open intervals at the half-unit,
/// so bin 1 is `[0, 1.5)`, bin 2 `[1.5, 50.5)` and so on; values above 4000
/// stay in bin 8.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmcBinRanges {
    pub upper_edges: Vec<f64>,
}

impl Default for AmcBinRanges {
    fn default() -> Self {
        Self {
            upper_edges: alloc::vec![1.5, 50.5, 150.5, 400.5, 600.5, 1200.5, 2500.5],
        }
    }
}

impl AmcBinRanges {
    pub fn n_bins(&self) -> usize {
        self.upper_edges.len() + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.upper_edges.windows(2).any(|w| !(w[0] < w[1]))
            || self.upper_edges.iter().any(|e| !e.is_finite())
        {
            return Err(Error::Config(
                "AMC bin edges must be finite and strictly increasing".into(),
            ));
        }
        Ok(())
    }

    pub fn bin_of(&self, amc_kwh: f64) -> usize {
        1 + self
            .upper_edges
            .iter()
            .take_while(|&&e| amc_kwh >= e)
            .count()
    }
}

pub fn assign_amc_bins(
    dataset: &ProfileDataset,
    stats: &BTreeMap<HouseholdId, HouseholdStats>,
    ranges: &AmcBinRanges,
) -> Result<BinAssignment> {
    ranges.validate()?;
    let labels = dataset
        .profiles()
        .iter()
        .map(|p| {
            stats
                .get(p.household())
                .map(|s| ranges.bin_of(s.amc_kwh))
                .ok_or_else(|| Error::UnknownHousehold(p.household().clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BinAssignment {
        scheme: BinScheme::Amc,
        n_bins: ranges.n_bins(),
        labels,
    })
}

/// Dimension of the integral k-means feature vector.
pub const INTEGRAL_DIM: usize = HOURS + 1;

/// Cumulative sum of the unit-normed profile with the raw daily peak
/// appended. An all-zero profile maps to the zero vector.
pub fn integral_features(profile: &DailyLoadProfile) -> [f64; INTEGRAL_DIM] {
    let mut out = [0.0; INTEGRAL_DIM];
    if let Ok(unit) = normalize(profile.values(), Normalization::Unit) {
        let mut acc = 0.0;
        for (o, v) in out.iter_mut().zip(&unit) {
            acc += v;
            *o = acc;
        }
    }
    out[HOURS] = profile.peak();
    out
}

/// Pre-bins by k-means over the integral feature vectors.
///
/// The k-means is fitted on the non-zero profiles only; all-zero profiles are
/// assigned afterwards to the bin with the nearest centroid. Bins are
/// numbered in ascending order of their centroid's daily peak, so bin 1 is the
/// lowest-demand bin.
pub fn integral_kmeans_bins(
    dataset: &ProfileDataset,
    n_bins: usize,
    seed: u64,
) -> Result<BinAssignment> {
    integral_kmeans_bins_with(dataset, &KMeans::new(n_bins).with_seed(seed))
}

/// [`integral_kmeans_bins`] with explicit k-means settings; `kmeans.k` is the
/// bin count.
pub fn integral_kmeans_bins_with(
    dataset: &ProfileDataset,
    kmeans: &KMeans,
) -> Result<BinAssignment> {
    let n_bins = kmeans.k;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if n_bins == 0 {
        return Err(Error::Config(
            "integral k-means needs at least one bin".into(),
        ));
    }
    let features: Vec<[f64; INTEGRAL_DIM]> =
        dataset.profiles().iter().map(integral_features).collect();
    let fit_rows: Vec<usize> = (0..dataset.len())
        .filter(|&i| !dataset.profiles()[i].is_zero())
        .collect();
    if fit_rows.is_empty() {
        return Ok(BinAssignment {
            scheme: BinScheme::IntegralKmeans,
            n_bins,
            labels: alloc::vec![1; dataset.len()],
        });
    }
    let data = Matrix::from_rows(INTEGRAL_DIM, fit_rows.iter().map(|&i| &features[i][..]))?;
    let fit = kmeans.fit(&data)?;

    let mut order: Vec<usize> = (0..n_bins).collect();
    order.sort_by(|&a, &b| {
        fit.centroids.row(a)[HOURS]
            .total_cmp(&fit.centroids.row(b)[HOURS])
            .then(a.cmp(&b))
    });
    let mut rank = alloc::vec![0; n_bins];
    for (r, &c) in order.iter().enumerate() {
        rank[c] = r + 1;
    }

    let labels = features
        .iter()
        .map(|f| rank[fit.nearest(f)])
        .collect::<Vec<_>>();
    debug_assert!(fit_rows
        .iter()
        .zip(&fit.labels)
        .all(|(&row, &l)| labels[row] == rank[l]));
    Ok(BinAssignment {
        scheme: BinScheme::IntegralKmeans,
        n_bins,
        labels,
    })
}

/// Row-level normalisation result used by the experiment pipeline.
pub fn normalize_rows(
    dataset: &ProfileDataset,
    method: Normalization,
) -> Vec<Result<[f64; HOURS]>> {
    dataset
        .profiles()
        .iter()
        .map(|p| normalize(p.values(), method))
        .collect()
}
