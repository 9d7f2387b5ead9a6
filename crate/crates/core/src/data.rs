//! Profile data model: daily load profiles, the dataset they form, derived
//! temporal attributes and household consumption statistics.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;

use serde::{Deserialize, Serialize};

use crate::date::{CivilDate, Weekday};
use crate::{Error, Result, HOURS};

/// Nominal supply voltage used to turn metered amperes into power.
pub const NOMINAL_VOLTAGE: f64 = 230.0;

pub type DayType = Weekday;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HouseholdId(String);

impl HouseholdId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for HouseholdId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for HouseholdId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

/// Mean hourly current (amperes) of one household over one day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyLoadProfile {
    household: HouseholdId,
    date: CivilDate,
    values: [f64; HOURS],
}

impl DailyLoadProfile {
    pub fn new(household: HouseholdId, date: CivilDate, values: [f64; HOURS]) -> Result<Self> {
        if let Some((hour, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::InvalidProfile {
                household: household.0,
                date: date.to_string(),
                reason: alloc::format!("hour {hour} has value {v}; expected a finite value >= 0"),
            });
        }
        Ok(Self {
            household,
            date,
            values,
        })
    }

    /// Builds a profile from a slice, checking its arity.
    pub fn from_slice(household: HouseholdId, date: CivilDate, values: &[f64]) -> Result<Self> {
        let arr: [f64; HOURS] = values.try_into().map_err(|_| Error::InvalidProfile {
            household: household.0.clone(),
            date: date.to_string(),
            reason: alloc::format!("expected {HOURS} hourly values, got {}", values.len()),
        })?;
        Self::new(household, date, arr)
    }

    pub fn household(&self) -> &HouseholdId {
        &self.household
    }

    pub fn date(&self) -> CivilDate {
        self.date
    }

    pub fn values(&self) -> &[f64; HOURS] {
        &self.values
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }
}

/// Ordered, immutable collection of daily load profiles.
///
/// Row order is the order the profiles were supplied in. The household index
/// maps every household to the contiguous row ranges it occupies.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileDataset {
    profiles: Vec<DailyLoadProfile>,
    household_index: BTreeMap<HouseholdId, Vec<Range<usize>>>,
}

impl ProfileDataset {
    pub fn new(profiles: Vec<DailyLoadProfile>) -> Self {
        let mut household_index: BTreeMap<HouseholdId, Vec<Range<usize>>> = BTreeMap::new();
        for (i, p) in profiles.iter().enumerate() {
            let ranges = household_index.entry(p.household.clone()).or_default();
            match ranges.last_mut() {
                Some(r) if r.end == i => r.end = i + 1,
                _ => ranges.push(i..i + 1),
            }
        }
        Self {
            profiles,
            household_index,
        }
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn profiles(&self) -> &[DailyLoadProfile] {
        &self.profiles
    }

    pub fn get(&self, row: usize) -> Option<&DailyLoadProfile> {
        self.profiles.get(row)
    }

    pub fn household_index(&self) -> &BTreeMap<HouseholdId, Vec<Range<usize>>> {
        &self.household_index
    }

    pub fn households(&self) -> impl Iterator<Item = &HouseholdId> + '_ {
        self.household_index.keys()
    }

    pub fn household_count(&self) -> usize {
        self.household_index.len()
    }

    /// Row indices of one household, in dataset order.
    pub fn rows_of(&self, household: &HouseholdId) -> Option<impl Iterator<Item = usize> + '_> {
        self.household_index
            .get(household)
            .map(|ranges| ranges.iter().flat_map(Clone::clone))
    }

    /// Keeps the rows for which `keep` returns true. Returns the new dataset
    /// and the original row index of each kept row.
    pub fn filter<F>(&self, mut keep: F) -> (ProfileDataset, Vec<usize>)
    where
        F: FnMut(&DailyLoadProfile) -> bool,
    {
        let mut rows = Vec::new();
        let mut profiles = Vec::new();
        for (i, p) in self.profiles.iter().enumerate() {
            if keep(p) {
                rows.push(i);
                profiles.push(p.clone());
            }
        }
        (ProfileDataset::new(profiles), rows)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Season {
    Winter,
    Summer,
}

impl Season {
    pub const ALL: [Season; 2] = [Season::Winter, Season::Summer];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Season::Winter => "winter",
            Season::Summer => "summer",
        }
    }
}

impl fmt::Display for Season {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for Season {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "winter" => Ok(Season::Winter),
            "summer" => Ok(Season::Summer),
            _ => Err(Error::Vocabulary {
                kind: "season",
                value: s.to_string(),
            }),
        }
    }
}

/// Month → season lookup. The default is the southern-hemisphere split:
/// May to August is winter, every other month summer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeasonMap {
    months: [Season; 12],
}

impl Default for SeasonMap {
    fn default() -> Self {
        Self::with_winter_months(&[5, 6, 7, 8]).expect("static months are valid")
    }
}

impl SeasonMap {
    pub fn with_winter_months(winter: &[u8]) -> Result<Self> {
        let mut months = [Season::Summer; 12];
        for &m in winter {
            if !(1..=12).contains(&m) {
                return Err(Error::Config(alloc::format!(
                    "month {m} out of range 1..=12"
                )));
            }
            months[usize::from(m - 1)] = Season::Winter;
        }
        Ok(Self { months })
    }

    pub fn season(&self, month: u8) -> Season {
        self.months[usize::from(month - 1)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemporalAttributes {
    pub daytype: DayType,
    pub month: u8,
    pub season: Season,
}

pub fn temporal_attributes(date: CivilDate, seasons: &SeasonMap) -> TemporalAttributes {
    TemporalAttributes {
        daytype: date.weekday(),
        month: date.month(),
        season: seasons.season(date.month()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HouseholdStats {
    pub household: HouseholdId,
    /// Average monthly consumption in kWh.
    pub amc_kwh: f64,
    pub n_days: usize,
}

/// Average monthly consumption of one household.
///
/// Hourly mean currents are converted to energy at the nominal voltage
/// (`230 * A * 1 h / 1000` kWh), summed over every observed day and divided by
/// the number of distinct calendar months (year, month) the household was
/// observed in.
pub fn compute_amc(dataset: &ProfileDataset, household: &HouseholdId) -> Result<HouseholdStats> {
    let rows = dataset
        .rows_of(household)
        .ok_or_else(|| Error::UnknownHousehold(household.clone()))?;
    let mut months = BTreeSet::new();
    let mut energy_kwh = 0.0;
    let mut n_days = 0;
    for row in rows {
        let p = &dataset.profiles[row];
        months.insert((p.date.year(), p.date.month()));
        energy_kwh += p
            .values
            .iter()
            .map(|a| NOMINAL_VOLTAGE * a / 1000.0)
            .sum::<f64>();
        n_days += 1;
    }
    Ok(HouseholdStats {
        household: household.clone(),
        amc_kwh: energy_kwh / months.len() as f64,
        n_days,
    })
}

/// AMC for every household in the dataset, keyed by household.
pub fn compute_all_amc(dataset: &ProfileDataset) -> BTreeMap<HouseholdId, HouseholdStats> {
    dataset
        .households()
        .map(|h| {
            let stats = compute_amc(dataset, h).expect("household taken from the index");
            (h.clone(), stats)
        })
        .collect()
}
