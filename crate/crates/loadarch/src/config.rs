//! TOML configuration of suites and synthetic data.
//!
//! A suite file names its data source, the evaluation settings and any
//! number of `[[experiment]]` grids. Every list-valued grid key (`m`, `s`,
//! `normalization`, `prebinning`, `keep_zeros`) also accepts a single value;
//! a grid expands to the cartesian product of its lists.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use loadarch_core::archetype::{LogisticConfig, SocioFilter, ASSOCIATION_THRESHOLD};
use loadarch_core::cluster::{Algorithm, ExperimentConfig, KMeansParams, SomParams};
use loadarch_core::external::{ExternalConfig, ThresholdRule, ZERO_TOLERANCE};
use loadarch_core::internal::SilhouetteConfig;
use loadarch_core::preprocess::{AmcBinRanges, BinScheme, Normalization};
use loadarch_core::scoring::{Direction, Measure, RankingRules, WeightProfile};
use loadarch_core::synth::{three_group_spec, GeneratorSpec};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

impl<T> Default for OneOrMany<T> {
    fn default() -> Self {
        OneOrMany::Many(Vec::new())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    /// Seed of every cell's clustering.
    #[serde(default)]
    pub seed: u64,
    /// External measures and scoring only for the best `top_k` cells by CI
    /// score; absent or 0 evaluates every cell.
    #[serde(default)]
    pub top_k: Option<usize>,
    pub data: DataSource,
    #[serde(default)]
    pub evaluation: EvaluationConfig,
    #[serde(rename = "experiment")]
    pub experiments: Vec<ExperimentGrid>,
    #[serde(default)]
    pub archetype: ArchetypeSettings,
}

/// Settings of the `archetype` verb.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArchetypeSettings {
    /// Cell to fit; defaults to the best cell of the score card.
    pub cell: Option<String>,
    pub threshold: f64,
    pub logistic: LogisticConfig,
    /// Socio-demographic filters; defaults to every preset.
    #[serde(rename = "filter")]
    pub filters: Vec<NamedFilter>,
}

impl Default for ArchetypeSettings {
    fn default() -> Self {
        Self {
            cell: None,
            threshold: ASSOCIATION_THRESHOLD,
            logistic: LogisticConfig::default(),
            filters: Vec::new(),
        }
    }
}

/// A filter given by preset name or by allowed values per attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedFilter {
    pub name: String,
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(flatten)]
    pub values: SocioFilter,
}

impl ArchetypeSettings {
    pub fn resolved_filters(&self) -> Result<Vec<(String, SocioFilter)>> {
        if self.filters.is_empty() {
            return SocioFilter::PRESETS
                .iter()
                .map(|p| Ok((p.to_string(), SocioFilter::preset(p)?)))
                .collect();
        }
        self.filters
            .iter()
            .map(|f| match &f.preset {
                Some(p) if f.values == SocioFilter::default() => {
                    Ok((f.name.clone(), SocioFilter::preset(p)?))
                }
                Some(_) => Err(Error::Config(format!(
                    "filter `{}` sets both a preset and attribute values",
                    f.name
                ))),
                None if f.values == SocioFilter::default() => Err(Error::Config(format!(
                    "filter `{}` constrains nothing",
                    f.name
                ))),
                None => Ok((f.name.clone(), f.values.clone())),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSource {
    /// Profile file, relative to the config file.
    pub profiles: Option<PathBuf>,
    /// Survey file, relative to the config file.
    pub survey: Option<PathBuf>,
    /// Synthetic data instead of files.
    pub generate: Option<GenerateSource>,
    /// Months counted as winter for file data; defaults to May through August.
    pub winter_months: Option<Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateSource {
    /// Built-in generator; only `three_group` exists.
    pub preset: Option<String>,
    pub households_per_group: Option<usize>,
    /// Generator file, relative to the suite file.
    pub spec: Option<PathBuf>,
    /// Generator seed; defaults to the suite seed.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThresholdSetting {
    Count(usize),
    /// `"auto"` scales the threshold to the dataset; `"default"` is the fixed
    /// full-scale count.
    Named(NamedThreshold),
    Rule(ThresholdRule),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedThreshold {
    Auto,
    Default,
}

impl ThresholdSetting {
    pub fn rule(self) -> ThresholdRule {
        match self {
            ThresholdSetting::Count(n) => ThresholdRule::Fixed(n),
            ThresholdSetting::Named(NamedThreshold::Auto) => ThresholdRule::auto(),
            ThresholdSetting::Named(NamedThreshold::Default) => ThresholdRule::default(),
            ThresholdSetting::Rule(r) => r,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub threshold: ThresholdSetting,
    pub zero_tolerance: f64,
    pub silhouette: SilhouetteConfig,
    /// Replaces the default weights; measures left out are not scored.
    pub weights: Option<BTreeMap<Measure, f64>>,
    /// Scores the zero-profile measure when using the default weights.
    pub score_zero_profile: bool,
    pub directions: BTreeMap<Measure, Direction>,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            threshold: ThresholdSetting::Named(NamedThreshold::Default),
            zero_tolerance: ZERO_TOLERANCE,
            silhouette: SilhouetteConfig::default(),
            weights: None,
            score_zero_profile: true,
            directions: BTreeMap::new(),
        }
    }
}

impl EvaluationConfig {
    pub fn external(&self) -> ExternalConfig {
        ExternalConfig {
            threshold: self.threshold.rule(),
            zero_tolerance: self.zero_tolerance,
        }
    }

    pub fn weights(&self) -> WeightProfile {
        match &self.weights {
            Some(w) => WeightProfile { weights: w.clone() },
            None if self.score_zero_profile => WeightProfile::default(),
            None => WeightProfile::without_zero_profile(),
        }
    }

    pub fn rules(&self) -> RankingRules {
        RankingRules {
            directions: self.directions.clone(),
        }
    }
}

fn all_normalizations() -> OneOrMany<Normalization> {
    OneOrMany::Many(Normalization::ALL.to_vec())
}

fn no_prebinning() -> OneOrMany<BinScheme> {
    OneOrMany::One(BinScheme::None)
}

fn drop_zeros() -> OneOrMany<bool> {
    OneOrMany::One(false)
}

/// One experiment and its parameter grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentGrid {
    pub name: String,
    pub algorithm: Algorithm,
    #[serde(default)]
    pub m: OneOrMany<usize>,
    #[serde(default)]
    pub s: OneOrMany<usize>,
    /// Defaults to every normalisation.
    #[serde(default = "all_normalizations")]
    pub normalization: OneOrMany<Normalization>,
    #[serde(default = "no_prebinning")]
    pub prebinning: OneOrMany<BinScheme>,
    #[serde(default = "drop_zeros")]
    pub keep_zeros: OneOrMany<bool>,
    pub integral_bins: Option<usize>,
    pub amc_ranges: Option<AmcBinRanges>,
    #[serde(default)]
    pub kmeans: KMeansParams,
    #[serde(default)]
    pub som: SomParams,
}

/// One runnable grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub id: String,
    pub experiment: String,
    pub config: ExperimentConfig,
}

impl ExperimentGrid {
    /// Cells in a fixed order: normalisation, pre-binning, zeros flag, `s`,
    /// then `m`.
    pub fn cells(&self, seed: u64) -> Result<Vec<Cell>> {
        let (ms, ss) = (self.m.to_vec(), self.s.to_vec());
        let need = |present: bool, wanted: bool, key: &str| -> Result<()> {
            match (present, wanted) {
                (false, true) => Err(Error::Config(format!(
                    "experiment `{}`: {} needs `{key}`",
                    self.name, self.algorithm
                ))),
                (true, false) => Err(Error::Config(format!(
                    "experiment `{}`: {} takes no `{key}`",
                    self.name, self.algorithm
                ))),
                _ => Ok(()),
            }
        };
        need(!ms.is_empty(), self.algorithm != Algorithm::Som, "m")?;
        need(!ss.is_empty(), self.algorithm != Algorithm::Kmeans, "s")?;
        let ms: Vec<Option<usize>> = if ms.is_empty() {
            vec![None]
        } else {
            ms.into_iter().map(Some).collect()
        };
        let ss: Vec<Option<usize>> = if ss.is_empty() {
            vec![None]
        } else {
            ss.into_iter().map(Some).collect()
        };
        let mut out = Vec::new();
        for norm in self.normalization.to_vec() {
            for prebin in self.prebinning.to_vec() {
                for keep in self.keep_zeros.to_vec() {
                    for &s in &ss {
                        for &m in &ms {
                            let mut config = match self.algorithm {
                                Algorithm::Kmeans => {
                                    ExperimentConfig::kmeans(0, norm, prebin, keep, seed)
                                }
                                Algorithm::Som => {
                                    ExperimentConfig::som(0, norm, prebin, keep, seed)
                                }
                                Algorithm::SomKmeans => {
                                    ExperimentConfig::som_kmeans(0, 0, norm, prebin, keep, seed)
                                }
                            };
                            config.m = m;
                            config.s = s;
                            if let Some(n) = self.integral_bins {
                                config.integral_bins = n;
                            }
                            if let Some(r) = &self.amc_ranges {
                                config.amc_ranges = r.clone();
                            }
                            config.kmeans = self.kmeans;
                            config.som = self.som;
                            let mut id =
                                format!("{}.{norm}.{prebin}.z{}", self.name, u8::from(keep));
                            if let Some(s) = s {
                                id += &format!(".s{s}");
                            }
                            if let Some(m) = m {
                                id += &format!(".m{m}");
                            }
                            out.push(Cell {
                                id,
                                experiment: self.name.clone(),
                                config,
                            });
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

impl SuiteConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::parse(path, e))
    }

    /// Every cell of every grid. Ids must be unique and safe as directory
    /// names.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        if self.experiments.is_empty() {
            return Err(Error::Config("suite has no [[experiment]] entries".into()));
        }
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        for grid in &self.experiments {
            if grid.name.is_empty()
                || !grid
                    .name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
            {
                return Err(Error::Config(format!(
                    "experiment name `{}` must be non-empty ASCII letters, digits, `_` or `-`",
                    grid.name
                )));
            }
            for cell in grid.cells(self.seed)? {
                if !seen.insert(cell.id.clone()) {
                    return Err(Error::Config(format!("duplicate cell `{}`", cell.id)));
                }
                out.push(cell);
            }
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.data;
        match (&d.profiles, &d.generate) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "set either data.profiles or data.generate, not both".into(),
                ))
            }
            (None, None) => {
                return Err(Error::Config("data needs `profiles` or `generate`".into()))
            }
            _ => {}
        }
        if let Some(g) = &d.generate {
            if g.preset.is_some() == g.spec.is_some() {
                return Err(Error::Config(
                    "data.generate needs exactly one of `preset` or `spec`".into(),
                ));
            }
            if d.survey.is_some() {
                return Err(Error::Config(
                    "generated data brings its own survey; drop data.survey".into(),
                ));
            }
        }
        self.evaluation.weights().validate()?;
        if self.archetype.threshold <= 0.0 || !self.archetype.threshold.is_finite() {
            return Err(Error::Config("archetype.threshold must be positive".into()));
        }
        self.archetype.resolved_filters()?;
        if self.evaluation.zero_tolerance.is_nan() || self.evaluation.zero_tolerance < 0.0 {
            return Err(Error::Config(
                "evaluation.zero_tolerance must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// A generator file is either `preset = "three_group"` (with an optional
/// `households_per_group`) or a full generator description with the keys
/// `dates`, `winter_months` and `groups` (each group: `name`, `households`,
/// `amplitude`, `noise`, `template` or `patterns`, optional `survey`).
pub fn parse_generator(text: &str, path: &Path) -> Result<GeneratorSpec> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Preset {
        preset: String,
        households_per_group: Option<usize>,
    }
    let value: toml::Table = toml::from_str(text).map_err(|e| Error::parse(path, e))?;
    if value.contains_key("preset") {
        let p: Preset = value.try_into().map_err(|e| Error::parse(path, e))?;
        preset_spec(&p.preset, p.households_per_group)
    } else {
        value.try_into().map_err(|e| Error::parse(path, e))
    }
}

pub fn preset_spec(name: &str, households_per_group: Option<usize>) -> Result<GeneratorSpec> {
    match name {
        "three_group" => Ok(three_group_spec(households_per_group.unwrap_or(100))),
        other => Err(Error::Config(format!("unknown generator preset `{other}`"))),
    }
}
