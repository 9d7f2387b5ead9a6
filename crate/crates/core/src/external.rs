//! Cluster measures judged against the raw profiles: demand errors, peak
//! coincidence, feature entropies and usability.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::cluster::{build_rdlps, ClusterModel, Rdlp};
use crate::data::{DailyLoadProfile, ProfileDataset};
use crate::date::Weekday;
use crate::math::{exp, ln, log2, mean, median};
use crate::{Error, Result, HOURS};

/// Error statistics of one demand quantity (total or peak).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    pub mape: f64,
    pub mdape: f64,
    pub mdlq: f64,
    pub mdsyma: f64,
    /// Members that entered the statistics.
    pub used: usize,
}

/// Errors of a representative value `r` against member values `h`.
/// Members with `h <= 0` are skipped; returns `None` when none remain.
pub fn error_metrics(r: f64, h: &[f64]) -> Option<ErrorMetrics> {
    let h: Vec<f64> = h.iter().copied().filter(|&v| v > 0.0).collect();
    if h.is_empty() {
        return None;
    }
    let ape: Vec<f64> = h.iter().map(|&v| (v - r).abs() / v).collect();
    let lq: Vec<f64> = h.iter().map(|&v| ln(r / v)).collect();
    let abs_lq: Vec<f64> = lq.iter().map(|v| v.abs()).collect();
    Some(ErrorMetrics {
        mape: 100.0 * mean(&ape)?,
        mdape: 100.0 * median(&ape)?,
        mdlq: median(&lq)?,
        mdsyma: 100.0 * (exp(median(&abs_lq)?) - 1.0),
        used: h.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemandErrors {
    pub total: Option<ErrorMetrics>,
    pub peak: Option<ErrorMetrics>,
    /// Members left out for a zero daily total.
    pub excluded_total: usize,
    /// Members left out for a zero daily peak.
    pub excluded_peak: usize,
}

pub fn demand_errors<'a, I>(rdlp: &[f64; HOURS], members: I) -> Result<DemandErrors>
where
    I: IntoIterator<Item = &'a DailyLoadProfile>,
{
    let (totals, peaks): (Vec<f64>, Vec<f64>) =
        members.into_iter().map(|p| (p.total(), p.peak())).unzip();
    if totals.is_empty() {
        return Err(Error::EmptyCluster(0));
    }
    let r_total: f64 = rdlp.iter().sum();
    let r_peak = rdlp.iter().copied().fold(0.0, f64::max);
    Ok(DemandErrors {
        total: error_metrics(r_total, &totals),
        peak: error_metrics(r_peak, &peaks),
        excluded_total: totals.iter().filter(|&&v| v <= 0.0).count(),
        excluded_peak: peaks.iter().filter(|&&v| v <= 0.0).count(),
    })
}

/// Hours whose value exceeds half the profile maximum, as a bit set.
pub fn peak_hours(values: &[f64; HOURS]) -> u32 {
    let max = values.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return 0;
    }
    values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.5 * max)
        .fold(0, |acc, (h, _)| acc | (1 << h))
}

/// Mean count of RDLP peak hours shared by each member, over the RDLP peak
/// count. Zero for an all-zero RDLP.
pub fn peak_coincidence_ratio<'a, I>(rdlp: &[f64; HOURS], members: I) -> Result<f64>
where
    I: IntoIterator<Item = &'a [f64; HOURS]>,
{
    let reference = peak_hours(rdlp);
    let mut n = 0usize;
    let mut shared = 0u64;
    for m in members {
        n += 1;
        shared += u64::from((peak_hours(m) & reference).count_ones());
    }
    if n == 0 {
        return Err(Error::EmptyCluster(0));
    }
    if reference == 0 {
        return Ok(0.0);
    }
    Ok(shared as f64 / n as f64 / f64::from(reference.count_ones()))
}

/// Equal-frequency bins over a sample; ties fall into the lower bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercentileBins {
    /// Inner edges; a value equal to an edge belongs to the bin below it.
    pub edges: Vec<f64>,
}

impl PercentileBins {
    pub fn new(values: &[f64], n_bins: usize) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if n_bins == 0 {
            return Err(Error::Config(
                "percentile binning needs at least one bin".into(),
            ));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let edges = (1..n_bins)
            .map(|p| sorted[(p * n).div_ceil(n_bins) - 1])
            .collect();
        Ok(Self { edges })
    }

    pub fn n_bins(&self) -> usize {
        self.edges.len() + 1
    }

    /// 1-based bin of `value`.
    pub fn bin_of(&self, value: f64) -> usize {
        1 + self.edges.partition_point(|&e| e < value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    DayType,
    Month,
    TotalDemand,
    PeakDemand,
}

impl Feature {
    pub const ALL: [Feature; 4] = [
        Feature::DayType,
        Feature::Month,
        Feature::TotalDemand,
        Feature::PeakDemand,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Feature::DayType => "daytype",
            Feature::Month => "month",
            Feature::TotalDemand => "total_demand",
            Feature::PeakDemand => "peak_demand",
        }
    }
}

pub const DEMAND_PERCENTILES: usize = 100;

/// Dataset-wide feature counts that cluster counts are compared against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMarginals {
    pub total_bins: PercentileBins,
    pub peak_bins: PercentileBins,
    /// Counts per feature, in `Feature::ALL` order.
    pub counts: [Vec<usize>; 4],
}

impl FeatureMarginals {
    /// Marginals over `rows` of `dataset`.
    pub fn new(dataset: &ProfileDataset, rows: &[usize]) -> Result<Self> {
        let profiles = rows.iter().map(|&r| &dataset.profiles()[r]);
        let totals: Vec<f64> = profiles.clone().map(DailyLoadProfile::total).collect();
        let peaks: Vec<f64> = profiles.map(DailyLoadProfile::peak).collect();
        let mut m = Self {
            total_bins: PercentileBins::new(&totals, DEMAND_PERCENTILES)?,
            peak_bins: PercentileBins::new(&peaks, DEMAND_PERCENTILES)?,
            counts: [vec![], vec![], vec![], vec![]],
        };
        m.counts = m.count(rows.iter().map(|&r| &dataset.profiles()[r]));
        Ok(m)
    }

    pub fn cardinality(&self, feature: Feature) -> usize {
        match feature {
            Feature::DayType => Weekday::ALL.len(),
            Feature::Month => 12,
            Feature::TotalDemand => self.total_bins.n_bins(),
            Feature::PeakDemand => self.peak_bins.n_bins(),
        }
    }

    /// 0-based value index of `profile` for `feature`.
    pub fn value_of(&self, feature: Feature, profile: &DailyLoadProfile) -> usize {
        match feature {
            Feature::DayType => profile.date().weekday().index(),
            Feature::Month => usize::from(profile.date().month()) - 1,
            Feature::TotalDemand => self.total_bins.bin_of(profile.total()) - 1,
            Feature::PeakDemand => self.peak_bins.bin_of(profile.peak()) - 1,
        }
    }

    /// Per-feature value counts of a set of profiles.
    pub fn count<'a, I>(&self, profiles: I) -> [Vec<usize>; 4]
    where
        I: IntoIterator<Item = &'a DailyLoadProfile>,
    {
        let mut out = Feature::ALL.map(|f| vec![0; self.cardinality(f)]);
        for p in profiles {
            for (i, f) in Feature::ALL.iter().enumerate() {
                out[i][self.value_of(*f, p)] += 1;
            }
        }
        out
    }
}

/// Assignment likelihood per feature value, renormalised to sum to one.
pub fn likelihood(cluster_counts: &[usize], dataset_counts: &[usize]) -> Result<Vec<f64>> {
    if cluster_counts.len() != dataset_counts.len() {
        return Err(Error::Dimension {
            expected: dataset_counts.len(),
            got: cluster_counts.len(),
        });
    }
    let q: Vec<f64> = cluster_counts
        .iter()
        .zip(dataset_counts)
        .map(|(&c, &d)| if d == 0 { 0.0 } else { c as f64 / d as f64 })
        .collect();
    normalize_likelihood(&q)
}

fn normalize_likelihood(q: &[f64]) -> Result<Vec<f64>> {
    let sum: f64 = q.iter().sum();
    if !(sum > 0.0) {
        return Err(Error::EmptyCluster(0));
    }
    Ok(q.iter().map(|v| v / sum).collect())
}

/// Base-2 Shannon entropy of the renormalised likelihoods `q`.
pub fn entropy_of_likelihood(q: &[f64]) -> Result<f64> {
    let p = normalize_likelihood(q)?;
    Ok(shannon(&p))
}

fn shannon(p: &[f64]) -> f64 {
    // `0.0 - sum` keeps a point mass at +0.0.
    0.0 - p
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| v * log2(v))
        .sum::<f64>()
}

pub fn entropy(cluster_counts: &[usize], dataset_counts: &[usize]) -> Result<f64> {
    Ok(shannon(&likelihood(cluster_counts, dataset_counts)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Entropies {
    pub daytype: f64,
    pub month: f64,
    pub total_demand: f64,
    pub peak_demand: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterMeasures {
    pub cluster: usize,
    pub member_count: usize,
    pub demand_errors: DemandErrors,
    pub peak_coincidence_ratio: f64,
    pub entropy: Entropies,
    /// Renormalised likelihood per day type, Monday first.
    pub daytype_likelihood: Vec<f64>,
}

/// Membership threshold used for usability and score aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdRule {
    Fixed(usize),
    /// `fraction * households * days`, rounded to the nearest count.
    Scaled {
        fraction: f64,
        days: f64,
    },
}

pub const DEFAULT_THRESHOLD: usize = 10_490;

impl Default for ThresholdRule {
    fn default() -> Self {
        ThresholdRule::Fixed(DEFAULT_THRESHOLD)
    }
}

impl ThresholdRule {
    pub fn auto() -> Self {
        ThresholdRule::Scaled {
            fraction: 0.05,
            days: 14.0,
        }
    }

    pub fn threshold(&self, households: usize) -> usize {
        match *self {
            ThresholdRule::Fixed(t) => t,
            ThresholdRule::Scaled { fraction, days } => {
                libm::round(fraction * households as f64 * days) as usize
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UsabilityReport {
    pub zero_profile_represented: bool,
    pub membership_threshold_ratio: f64,
    pub threshold: usize,
}

/// Fraction of clusters with more than `threshold` members.
pub fn threshold_ratio(member_counts: &[usize], threshold: usize) -> f64 {
    if member_counts.is_empty() {
        return 0.0;
    }
    member_counts.iter().filter(|&&n| n > threshold).count() as f64 / member_counts.len() as f64
}

/// Default tolerance, relative to the mean daily peak, below which an RDLP
/// counts as a zero profile.
pub const ZERO_TOLERANCE: f64 = 1e-6;

pub fn usability(
    model: &ClusterModel,
    dataset: &ProfileDataset,
    rdlps: &[Rdlp],
    threshold: usize,
    zero_tolerance: f64,
) -> UsabilityReport {
    let mean_peak = mean(
        &dataset
            .profiles()
            .iter()
            .map(DailyLoadProfile::peak)
            .collect::<Vec<_>>(),
    )
    .unwrap_or(0.0);
    let near_zero = rdlps
        .iter()
        .any(|r| r.values.iter().copied().fold(0.0, f64::max) <= zero_tolerance * mean_peak);
    let zero_rows: Vec<usize> = (0..dataset.len())
        .filter(|&r| dataset.profiles()[r].is_zero())
        .collect();
    let dedicated = !zero_rows.is_empty()
        && model.cluster_members().iter().any(|members| {
            members.iter().all(|&r| dataset.profiles()[r].is_zero())
                && members.len() == zero_rows.len()
                && !members.is_empty()
        });
    let counts: Vec<usize> = rdlps.iter().map(|r| r.member_count).collect();
    UsabilityReport {
        zero_profile_represented: near_zero || dedicated,
        membership_threshold_ratio: threshold_ratio(&counts, threshold),
        threshold,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExternalConfig {
    pub threshold: ThresholdRule,
    pub zero_tolerance: f64,
}

impl Default for ExternalConfig {
    fn default() -> Self {
        Self {
            threshold: ThresholdRule::default(),
            zero_tolerance: ZERO_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalReport {
    pub clusters: Vec<ClusterMeasures>,
    pub usability: UsabilityReport,
}

/// Measures of every non-empty cluster of a fitted experiment.
pub fn evaluate_external(
    model: &ClusterModel,
    dataset: &ProfileDataset,
    config: &ExternalConfig,
) -> Result<ExternalReport> {
    if model.labels.len() != dataset.len() {
        return Err(Error::Dimension {
            expected: model.labels.len(),
            got: dataset.len(),
        });
    }
    let labelled: Vec<usize> = (0..dataset.len())
        .filter(|&r| model.labels[r].is_some())
        .collect();
    let marginals = FeatureMarginals::new(dataset, &labelled)?;
    let rdlps = build_rdlps(model, dataset);
    let members = model.cluster_members();
    let mut clusters = Vec::with_capacity(rdlps.len());
    for rdlp in &rdlps {
        let profiles: Vec<&DailyLoadProfile> = members[rdlp.cluster]
            .iter()
            .map(|&r| &dataset.profiles()[r])
            .collect();
        let counts = marginals.count(profiles.iter().copied());
        let ent = |i: usize| entropy(&counts[i], &marginals.counts[i]);
        clusters.push(ClusterMeasures {
            cluster: rdlp.cluster,
            member_count: rdlp.member_count,
            demand_errors: demand_errors(&rdlp.values, profiles.iter().copied())?,
            peak_coincidence_ratio: peak_coincidence_ratio(
                &rdlp.values,
                profiles.iter().map(|p| p.values()),
            )?,
            entropy: Entropies {
                daytype: ent(0)?,
                month: ent(1)?,
                total_demand: ent(2)?,
                peak_demand: ent(3)?,
            },
            daytype_likelihood: likelihood(&counts[0], &marginals.counts[0])?,
        });
    }
    let threshold = config.threshold.threshold(dataset.household_count());
    let usability = usability(model, dataset, &rdlps, threshold, config.zero_tolerance);
    Ok(ExternalReport {
        clusters,
        usability,
    })
}
