//! Experiment ranking by weighted per-measure ranks.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::external::{ClusterMeasures, ErrorMetrics, ExternalReport};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    ZeroProfile,
    ThresholdRatio,
    TotalDemandError,
    PeakDemandError,
    PeakCoincidence,
    DaytypeEntropy,
    MonthEntropy,
    TotalDemandEntropy,
    PeakDemandEntropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    LowerBetter,
    HigherBetter,
}

impl Measure {
    pub const ALL: [Measure; 9] = [
        Measure::ZeroProfile,
        Measure::ThresholdRatio,
        Measure::TotalDemandError,
        Measure::PeakDemandError,
        Measure::PeakCoincidence,
        Measure::DaytypeEntropy,
        Measure::MonthEntropy,
        Measure::TotalDemandEntropy,
        Measure::PeakDemandEntropy,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Measure::ZeroProfile => "zero_profile",
            Measure::ThresholdRatio => "threshold_ratio",
            Measure::TotalDemandError => "total_demand_error",
            Measure::PeakDemandError => "peak_demand_error",
            Measure::PeakCoincidence => "peak_coincidence",
            Measure::DaytypeEntropy => "daytype_entropy",
            Measure::MonthEntropy => "month_entropy",
            Measure::TotalDemandEntropy => "total_demand_entropy",
            Measure::PeakDemandEntropy => "peak_demand_entropy",
        }
    }

    pub fn default_weight(self) -> f64 {
        match self {
            Measure::ZeroProfile => 1.0,
            Measure::ThresholdRatio => 2.0,
            Measure::TotalDemandError | Measure::PeakDemandError => 6.0,
            Measure::PeakCoincidence => 3.0,
            Measure::DaytypeEntropy | Measure::MonthEntropy => 4.0,
            Measure::TotalDemandEntropy | Measure::PeakDemandEntropy => 5.0,
        }
    }

    pub fn default_direction(self) -> Direction {
        match self {
            Measure::ZeroProfile | Measure::ThresholdRatio | Measure::PeakCoincidence => {
                Direction::HigherBetter
            }
            _ => Direction::LowerBetter,
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Measure::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(alloc::format!("unknown measure '{s}'")))
    }
}

/// Weight of every scored measure. Measures without a weight are not scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightProfile {
    pub weights: BTreeMap<Measure, f64>,
}

impl Default for WeightProfile {
    fn default() -> Self {
        Self {
            weights: Measure::ALL
                .into_iter()
                .map(|m| (m, m.default_weight()))
                .collect(),
        }
    }
}

impl WeightProfile {
    /// Default weights without the zero-profile measure.
    pub fn without_zero_profile() -> Self {
        let mut w = Self::default();
        w.weights.remove(&Measure::ZeroProfile);
        w
    }

    pub fn validate(&self) -> Result<()> {
        match self
            .weights
            .iter()
            .find(|(_, w)| !(**w > 0.0 && w.is_finite()))
        {
            Some((m, w)) => Err(Error::Config(alloc::format!(
                "weight of {m} must be positive, got {w}"
            ))),
            None if self.weights.is_empty() => Err(Error::Config("no measure has a weight".into())),
            None => Ok(()),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            weights: self
                .weights
                .iter()
                .map(|(&m, &w)| (m, w * factor))
                .collect(),
        }
    }
}

/// Per-measure direction overrides on top of the built-in directions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RankingRules {
    pub directions: BTreeMap<Measure, Direction>,
}

impl RankingRules {
    pub fn direction(&self, m: Measure) -> Direction {
        self.directions
            .get(&m)
            .copied()
            .unwrap_or_else(|| m.default_direction())
    }
}

/// Experiment-level values aggregated from qualifying clusters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentMeasures {
    pub experiment: String,
    /// False when no cluster exceeds the membership threshold.
    pub scorable: bool,
    pub qualifying_clusters: usize,
    pub zero_profile: bool,
    pub threshold_ratio: f64,
    /// MAPE, MdAPE, |MdLQ| and MdSymA of the total demand.
    pub total_error: [Option<f64>; 4],
    /// MAPE, MdAPE, |MdLQ| and MdSymA of the peak demand.
    pub peak_error: [Option<f64>; 4],
    pub peak_coincidence: Option<f64>,
    /// Day-type, month, total- and peak-demand entropy.
    pub entropy: [Option<f64>; 4],
}

fn weighted_mean<I: Iterator<Item = (usize, Option<f64>)>>(items: I) -> Option<f64> {
    let (mut acc, mut n) = (0.0, 0usize);
    for (w, v) in items {
        if let Some(v) = v {
            acc += w as f64 * v;
            n += w;
        }
    }
    (n > 0).then(|| acc / n as f64)
}

fn error_parts(m: Option<ErrorMetrics>) -> [Option<f64>; 4] {
    match m {
        Some(m) => [
            Some(m.mape),
            Some(m.mdape),
            Some(m.mdlq.abs()),
            Some(m.mdsyma),
        ],
        None => [None; 4],
    }
}

/// Member-weighted means over the clusters with more than `threshold`
/// members. The log-ratio error enters as its magnitude.
pub fn aggregate_experiment_measures(
    experiment: &str,
    report: &ExternalReport,
    threshold: usize,
) -> ExperimentMeasures {
    let qualifying: Vec<&ClusterMeasures> = report
        .clusters
        .iter()
        .filter(|c| c.member_count > threshold)
        .collect();
    let mean_of = |f: &dyn Fn(&ClusterMeasures) -> Option<f64>| {
        weighted_mean(qualifying.iter().map(|c| (c.member_count, f(c))))
    };
    let total_error = core::array::from_fn(|i| mean_of(&|c| error_parts(c.demand_errors.total)[i]));
    let peak_error = core::array::from_fn(|i| mean_of(&|c| error_parts(c.demand_errors.peak)[i]));
    let entropy = core::array::from_fn(|i| {
        mean_of(&|c| {
            Some(
                [
                    c.entropy.daytype,
                    c.entropy.month,
                    c.entropy.total_demand,
                    c.entropy.peak_demand,
                ][i],
            )
        })
    });
    ExperimentMeasures {
        experiment: experiment.into(),
        scorable: !qualifying.is_empty(),
        qualifying_clusters: qualifying.len(),
        zero_profile: report.usability.zero_profile_represented,
        threshold_ratio: report.usability.membership_threshold_ratio,
        total_error,
        peak_error,
        peak_coincidence: mean_of(&|c| Some(c.peak_coincidence_ratio)),
        entropy,
    }
}

/// Values within this relative distance of each other share a rank, so that
/// the same clustering reached by different summation orders ties.
pub const RANK_TIE_TOLERANCE: f64 = 1e-9;

fn tied(a: f64, b: f64) -> bool {
    (a - b).abs() <= RANK_TIE_TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

/// Average ranks (1 = best). Missing values rank `n + 1`. Values within
/// [`RANK_TIE_TOLERANCE`] of the first value of a run are tied.
pub fn average_ranks(values: &[Option<f64>], direction: Direction) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).filter(|&i| values[i].is_some()).collect();
    let key = |i: usize| {
        let v = values[i].expect("defined");
        match direction {
            Direction::LowerBetter => v,
            Direction::HigherBetter => -v,
        }
    };
    order.sort_by(|&a, &b| key(a).total_cmp(&key(b)));
    let mut ranks = vec![(n + 1) as f64; n];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && tied(key(order[end]), key(order[start])) {
            end += 1;
        }
        // Positions start..end share the mean of ranks start+1..=end.
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Rank of every experiment on every measure, indexed `[measure][experiment]`.
/// Demand-error ranks are the mean of the four error-metric ranks.
/// Non-scorable experiments rank `n + 1` throughout.
pub fn rank_experiments(
    experiments: &[ExperimentMeasures],
    rules: &RankingRules,
) -> BTreeMap<Measure, Vec<f64>> {
    let gate = |e: &ExperimentMeasures, v: Option<f64>| if e.scorable { v } else { None };
    let column = |f: &dyn Fn(&ExperimentMeasures) -> Option<f64>| -> Vec<Option<f64>> {
        experiments.iter().map(|e| gate(e, f(e))).collect()
    };
    let ranks_of = |values: Vec<Option<f64>>, dir| average_ranks(&values, dir);
    let mut out = BTreeMap::new();
    for m in Measure::ALL {
        let dir = rules.direction(m);
        let ranks = match m {
            Measure::ZeroProfile => {
                ranks_of(column(&|e| Some(f64::from(u8::from(e.zero_profile)))), dir)
            }
            Measure::ThresholdRatio => ranks_of(column(&|e| Some(e.threshold_ratio)), dir),
            Measure::TotalDemandError | Measure::PeakDemandError => {
                let parts: Vec<Vec<f64>> = (0..4)
                    .map(|i| {
                        ranks_of(
                            column(&|e| {
                                if m == Measure::TotalDemandError {
                                    e.total_error[i]
                                } else {
                                    e.peak_error[i]
                                }
                            }),
                            dir,
                        )
                    })
                    .collect();
                (0..experiments.len())
                    .map(|e| parts.iter().map(|p| p[e]).sum::<f64>() / 4.0)
                    .collect()
            }
            Measure::PeakCoincidence => ranks_of(column(&|e| e.peak_coincidence), dir),
            Measure::DaytypeEntropy => ranks_of(column(&|e| e.entropy[0]), dir),
            Measure::MonthEntropy => ranks_of(column(&|e| e.entropy[1]), dir),
            Measure::TotalDemandEntropy => ranks_of(column(&|e| e.entropy[2]), dir),
            Measure::PeakDemandEntropy => ranks_of(column(&|e| e.entropy[3]), dir),
        };
        out.insert(m, ranks);
    }
    out
}

/// Weighted rank sum per experiment over the weighted measures.
pub fn total_score(
    ranks: &BTreeMap<Measure, Vec<f64>>,
    weights: &WeightProfile,
) -> Result<Vec<f64>> {
    weights.validate()?;
    let n = ranks.values().next().map_or(0, Vec::len);
    let mut totals = vec![0.0; n];
    for (m, &w) in &weights.weights {
        let r = ranks
            .get(m)
            .ok_or_else(|| Error::Config(alloc::format!("no ranks for measure {m}")))?;
        if r.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: r.len(),
            });
        }
        for (t, r) in totals.iter_mut().zip(r) {
            *t += w * r;
        }
    }
    Ok(totals)
}

/// Experiment indices by ascending score; ties keep input order. Totals are
/// compared after rounding to [`RANK_TIE_TOLERANCE`] of the largest total, so
/// rounding noise from the weights cannot reorder equal scores.
pub fn final_order(totals: &[f64]) -> Vec<usize> {
    let scale = totals.iter().fold(1.0f64, |m, t| m.max(t.abs())) * RANK_TIE_TOLERANCE;
    let key = |i: usize| libm::round(totals[i] / scale);
    let mut order: Vec<usize> = (0..totals.len()).collect();
    order.sort_by(|&a, &b| key(a).total_cmp(&key(b)).then(a.cmp(&b)));
    order
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreCard {
    pub experiments: Vec<String>,
    pub scorable: Vec<bool>,
    pub weights: WeightProfile,
    /// Rank per measure and experiment.
    pub ranks: BTreeMap<Measure, Vec<f64>>,
    pub totals: Vec<f64>,
    /// Experiment indices, best first.
    pub order: Vec<usize>,
}

impl ScoreCard {
    /// Position (1 = best) of every experiment in the final order.
    pub fn final_rank(&self) -> Vec<usize> {
        let mut pos = vec![0; self.order.len()];
        for (p, &e) in self.order.iter().enumerate() {
            pos[e] = p + 1;
        }
        pos
    }
}

pub fn score_experiments(
    experiments: &[ExperimentMeasures],
    weights: &WeightProfile,
    rules: &RankingRules,
) -> Result<ScoreCard> {
    if experiments.len() < 2 {
        return Err(Error::Config(
            "scoring needs at least two experiments".into(),
        ));
    }
    let ranks = rank_experiments(experiments, rules);
    let totals = total_score(&ranks, weights)?;
    Ok(ScoreCard {
        experiments: experiments.iter().map(|e| e.experiment.clone()).collect(),
        scorable: experiments.iter().map(|e| e.scorable).collect(),
        weights: weights.clone(),
        order: final_order(&totals),
        ranks,
        totals,
    })
}
