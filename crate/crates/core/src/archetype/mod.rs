//! Cluster-to-attribute association and archetype assembly.

mod logistic;

pub use logistic::{
    fit_softmax, inverse_frequency_weights, softmax, ClassWeighting, LogisticConfig, Objective,
    SoftmaxModel,
};

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{temporal_attributes, HouseholdId, ProfileDataset, Season, SeasonMap};
use crate::date::Weekday;
use crate::math::exp;
use crate::matrix::Matrix;
use crate::survey::{FloorArea, Income, SurveyRecord, WallMaterial, Water};
use crate::{Error, Result};

/// One one-hot input column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum FeatureValue {
    Water(Water),
    Wall(WallMaterial),
    FloorArea(FloorArea),
    Income(Income),
    DayType(Weekday),
    Season(Season),
}

impl FeatureValue {
    pub fn attribute(self) -> &'static str {
        match self {
            FeatureValue::Water(_) => "water",
            FeatureValue::Wall(_) => "wall",
            FeatureValue::FloorArea(_) => "floor_area",
            FeatureValue::Income(_) => "income",
            FeatureValue::DayType(_) => "daytype",
            FeatureValue::Season(_) => "season",
        }
    }

    pub fn value(self) -> &'static str {
        match self {
            FeatureValue::Water(v) => v.as_str(),
            FeatureValue::Wall(v) => v.as_str(),
            FeatureValue::FloorArea(v) => v.as_str(),
            FeatureValue::Income(v) => v.as_str(),
            FeatureValue::DayType(v) => v.as_str(),
            FeatureValue::Season(v) => v.as_str(),
        }
    }

    pub fn is_temporal(self) -> bool {
        matches!(self, FeatureValue::DayType(_) | FeatureValue::Season(_))
    }

    /// Parses an `attribute` name and a value from its vocabulary.
    pub fn parse(attribute: &str, value: &str) -> Result<Self> {
        Ok(match attribute.trim() {
            "water" => FeatureValue::Water(value.parse()?),
            "wall" => FeatureValue::Wall(value.parse()?),
            "floor_area" | "floor" => FeatureValue::FloorArea(value.parse()?),
            "income" => FeatureValue::Income(value.parse()?),
            "daytype" => FeatureValue::DayType(value.parse()?),
            "season" => FeatureValue::Season(value.parse()?),
            other => {
                return Err(Error::Vocabulary {
                    kind: "attribute",
                    value: other.into(),
                })
            }
        })
    }
}

impl fmt::Display for FeatureValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.attribute(), self.value())
    }
}

impl FromStr for FeatureValue {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, v) = s.split_once('=').ok_or_else(|| Error::Vocabulary {
            kind: "feature",
            value: s.into(),
        })?;
        Self::parse(a, v)
    }
}

impl From<FeatureValue> for String {
    fn from(f: FeatureValue) -> Self {
        format!("{f}")
    }
}

impl TryFrom<String> for FeatureValue {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Every one-hot column in encoding order: the four survey attributes, then
/// day types and seasons.
pub fn feature_vocabulary() -> Vec<FeatureValue> {
    let mut out = Vec::new();
    out.extend(Water::ALL.iter().map(|&v| FeatureValue::Water(v)));
    out.extend(WallMaterial::ALL.iter().map(|&v| FeatureValue::Wall(v)));
    out.extend(FloorArea::ALL.iter().map(|&v| FeatureValue::FloorArea(v)));
    out.extend(Income::ALL.iter().map(|&v| FeatureValue::Income(v)));
    out.extend(Weekday::ALL.iter().map(|&v| FeatureValue::DayType(v)));
    out.extend(Season::ALL.iter().map(|&v| FeatureValue::Season(v)));
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub features: Vec<FeatureValue>,
    /// One-hot rows.
    pub x: Matrix,
    /// Cluster id of every row.
    pub labels: Vec<usize>,
    /// Dataset row behind every training row.
    pub rows: Vec<usize>,
    /// Clustered rows dropped for lack of a survey record.
    pub skipped_unsurveyed: usize,
}

/// One row per clustered profile whose household has a survey record.
pub fn build_training_set(
    dataset: &ProfileDataset,
    labels: &[Option<usize>],
    survey: &[SurveyRecord],
    seasons: &SeasonMap,
) -> Result<TrainingSet> {
    if labels.len() != dataset.len() {
        return Err(Error::Dimension {
            expected: dataset.len(),
            got: labels.len(),
        });
    }
    let features = feature_vocabulary();
    let column: BTreeMap<FeatureValue, usize> =
        features.iter().enumerate().map(|(i, &f)| (f, i)).collect();
    let by_household: BTreeMap<&HouseholdId, &SurveyRecord> =
        survey.iter().map(|r| (&r.household, r)).collect();
    let mut data = Vec::new();
    let mut out_labels = Vec::new();
    let mut rows = Vec::new();
    let mut skipped = 0;
    for (row, (p, label)) in dataset.profiles().iter().zip(labels).enumerate() {
        let Some(cluster) = *label else { continue };
        let Some(rec) = by_household.get(p.household()) else {
            skipped += 1;
            continue;
        };
        let t = temporal_attributes(p.date(), seasons);
        let mut x = vec![0.0; features.len()];
        for f in [
            FeatureValue::Water(rec.water),
            FeatureValue::Wall(rec.wall),
            FeatureValue::FloorArea(rec.floor_area),
            FeatureValue::Income(rec.income),
            FeatureValue::DayType(t.daytype),
            FeatureValue::Season(t.season),
        ] {
            x[column[&f]] = 1.0;
        }
        data.extend(x);
        out_labels.push(cluster);
        rows.push(row);
    }
    let x = Matrix::from_vec(rows.len(), features.len(), data)?;
    Ok(TrainingSet {
        features,
        x,
        labels: out_labels,
        rows,
        skipped_unsurveyed: skipped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchetypeModel {
    pub features: Vec<FeatureValue>,
    /// Cluster id of every class.
    pub clusters: Vec<usize>,
    /// Weights centred per feature across classes, `clusters x features`.
    pub coefficients: Matrix,
    /// `exp` of the centred coefficients.
    pub odds_ratios: Matrix,
    pub intercepts: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub final_loss: f64,
}

impl ArchetypeModel {
    pub fn odds_ratio(&self, feature: FeatureValue, cluster: usize) -> Option<f64> {
        let j = self.features.iter().position(|&f| f == feature)?;
        let c = self.clusters.iter().position(|&k| k == cluster)?;
        Some(self.odds_ratios.row(c)[j])
    }
}

/// Fits the softmax model and converts its weights to odds ratios.
///
/// Each feature's weights are centred across classes before exponentiation,
/// so an odds ratio compares a cluster with the average cluster.
pub fn fit_archetype_model(
    training: &TrainingSet,
    config: &LogisticConfig,
) -> Result<ArchetypeModel> {
    let clusters: Vec<usize> = training
        .labels
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let y: Vec<usize> = training
        .labels
        .iter()
        .map(|l| clusters.binary_search(l).expect("label present"))
        .collect();
    let fit = fit_softmax(&training.x, &y, clusters.len(), config)?;
    let (k, d) = (fit.weights.rows(), fit.weights.cols());
    let mut coefficients = fit.weights.clone();
    for j in 0..d {
        let mean = (0..k).map(|c| fit.weights.row(c)[j]).sum::<f64>() / k as f64;
        for c in 0..k {
            coefficients.row_mut(c)[j] -= mean;
        }
    }
    let mut odds_ratios = coefficients.clone();
    for c in 0..k {
        odds_ratios.row_mut(c).iter_mut().for_each(|v| *v = exp(*v));
    }
    Ok(ArchetypeModel {
        features: training.features.clone(),
        clusters,
        coefficients,
        odds_ratios,
        intercepts: fit.intercepts,
        iterations: fit.iterations,
        converged: fit.converged,
        final_loss: *fit.loss_trace.last().expect("initial loss recorded"),
    })
}

pub const ASSOCIATION_THRESHOLD: f64 = 1.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Association {
    pub feature: FeatureValue,
    pub cluster: usize,
    pub odds_ratio: f64,
}

/// All (feature, cluster) pairs with an odds ratio of at least `threshold`.
pub fn associate(model: &ArchetypeModel, threshold: f64) -> Vec<Association> {
    let mut out = Vec::new();
    for (c, &cluster) in model.clusters.iter().enumerate() {
        for (&feature, &odds_ratio) in model.features.iter().zip(model.odds_ratios.row(c)) {
            if odds_ratio >= threshold {
                out.push(Association {
                    feature,
                    cluster,
                    odds_ratio,
                });
            }
        }
    }
    out
}

/// Allowed values per survey attribute. An empty list leaves the attribute
/// unconstrained.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SocioFilter {
    pub water: Vec<Water>,
    pub wall: Vec<WallMaterial>,
    pub floor_area: Vec<FloorArea>,
    pub income: Vec<Income>,
}

impl SocioFilter {
    pub const PRESETS: [&'static str; 5] = [
        "rural",
        "informal",
        "township",
        "lower_middle",
        "upper_middle",
    ];

    /// Household types of the expert attribute table.
    pub fn preset(name: &str) -> Result<Self> {
        use FloorArea as F;
        use Income as I;
        use WallMaterial as W;
        use Water as Wa;
        let masonry = vec![W::Asbestos, W::Blocks, W::Brick];
        Ok(match name {
            "rural" => Self {
                water: vec![Wa::River, Wa::Dam],
                wall: vec![W::Daub, W::Mud, W::Clay],
                floor_area: vec![F::Upto50],
                income: vec![I::Upto1800],
            },
            "informal" => Self {
                water: vec![Wa::StreetTaps, Wa::TapInYard],
                wall: vec![W::CorrugatedIron, W::Zinc],
                floor_area: vec![F::Upto50],
                income: vec![I::From1800To3200],
            },
            "township" => Self {
                water: vec![Wa::TapInHouse],
                wall: masonry,
                floor_area: vec![F::From50To80],
                income: vec![I::From3200To7800],
            },
            "lower_middle" => Self {
                water: vec![Wa::TapInHouse],
                wall: masonry,
                floor_area: vec![F::From80To150],
                income: vec![I::From7800To11600],
            },
            "upper_middle" => Self {
                water: vec![Wa::TapInHouse],
                wall: vec![W::Brick],
                floor_area: vec![F::From150To250],
                income: vec![I::From19000To24500],
            },
            other => {
                return Err(Error::Vocabulary {
                    kind: "archetype preset",
                    value: other.into(),
                })
            }
        })
    }

    /// Builds a filter from `(attribute, value)` pairs.
    pub fn from_pairs<'a, I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut f = Self::default();
        for (a, v) in pairs {
            match FeatureValue::parse(a, v)? {
                FeatureValue::Water(x) => f.water.push(x),
                FeatureValue::Wall(x) => f.wall.push(x),
                FeatureValue::FloorArea(x) => f.floor_area.push(x),
                FeatureValue::Income(x) => f.income.push(x),
                t => {
                    return Err(Error::Config(format!(
                        "{} is not a survey attribute",
                        t.attribute()
                    )));
                }
            }
        }
        Ok(f)
    }

    /// Allowed feature values of each constrained attribute.
    pub fn groups(&self) -> Vec<Vec<FeatureValue>> {
        let groups = [
            self.water
                .iter()
                .map(|&v| FeatureValue::Water(v))
                .collect::<Vec<_>>(),
            self.wall.iter().map(|&v| FeatureValue::Wall(v)).collect(),
            self.floor_area
                .iter()
                .map(|&v| FeatureValue::FloorArea(v))
                .collect(),
            self.income
                .iter()
                .map(|&v| FeatureValue::Income(v))
                .collect(),
        ];
        groups.into_iter().filter(|g| !g.is_empty()).collect()
    }

    pub fn matches(&self, record: &SurveyRecord) -> bool {
        fn ok<T: PartialEq>(allowed: &[T], v: T) -> bool {
            allowed.is_empty() || allowed.contains(&v)
        }
        ok(&self.water, record.water)
            && ok(&self.wall, record.wall)
            && ok(&self.floor_area, record.floor_area)
            && ok(&self.income, record.income)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchetypeCluster {
    pub cluster: usize,
    pub daytypes: Vec<Weekday>,
    pub seasons: Vec<Season>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageCell {
    pub season: Season,
    pub daytype: Weekday,
    pub clusters: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Archetype {
    pub filter: SocioFilter,
    pub clusters: Vec<ArchetypeCluster>,
    /// Every season and day type, in that nesting order.
    pub coverage: Vec<CoverageCell>,
}

impl Archetype {
    /// Season and day-type cells no cluster covers.
    pub fn gaps(&self) -> Vec<(Season, Weekday)> {
        self.coverage
            .iter()
            .filter(|c| c.clusters.is_empty())
            .map(|c| (c.season, c.daytype))
            .collect()
    }
}

/// Clusters associated with every constrained attribute of `filter`, where a
/// cluster is associated with an attribute through any of its allowed values.
/// Each cluster is tagged with its associated day types and seasons, and a
/// cell is covered by clusters associated with both its season and day type.
pub fn assemble_archetype(associations: &[Association], filter: &SocioFilter) -> Archetype {
    let mut by_cluster: BTreeMap<usize, BTreeSet<FeatureValue>> = BTreeMap::new();
    for a in associations {
        by_cluster.entry(a.cluster).or_default().insert(a.feature);
    }
    let groups = filter.groups();
    let clusters: Vec<ArchetypeCluster> = by_cluster
        .iter()
        .filter(|(_, fs)| groups.iter().all(|g| g.iter().any(|f| fs.contains(f))))
        .map(|(&cluster, fs)| ArchetypeCluster {
            cluster,
            daytypes: Weekday::ALL
                .into_iter()
                .filter(|&d| fs.contains(&FeatureValue::DayType(d)))
                .collect(),
            seasons: Season::ALL
                .into_iter()
                .filter(|&s| fs.contains(&FeatureValue::Season(s)))
                .collect(),
        })
        .collect();
    let coverage = Season::ALL
        .into_iter()
        .flat_map(|season| {
            let clusters = &clusters;
            Weekday::ALL.into_iter().map(move |daytype| CoverageCell {
                season,
                daytype,
                clusters: clusters
                    .iter()
                    .filter(|c| c.seasons.contains(&season) && c.daytypes.contains(&daytype))
                    .map(|c| c.cluster)
                    .collect(),
            })
        })
        .collect();
    Archetype {
        filter: filter.clone(),
        clusters,
        coverage,
    }
}
