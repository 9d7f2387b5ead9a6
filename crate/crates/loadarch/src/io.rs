//! Delimited-text formats.
//!
//! Profiles: `household_id,date,v0,...,v23`, one row per household and day,
//! ISO-8601 dates, non-negative hourly values. Survey:
//! `household_id,water,wall,floor_band,income_band` with the closed
//! vocabulary tokens of `loadarch_core::survey`. Both need a header row.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use loadarch_core::data::{DailyLoadProfile, HouseholdId, ProfileDataset};
use loadarch_core::date::CivilDate;
use loadarch_core::survey::SurveyRecord;
use loadarch_core::synth::SyntheticDataset;
use loadarch_core::HOURS;

use crate::error::{Error, Result};

pub const SURVEY_HEADER: [&str; 5] = ["household_id", "water", "wall", "floor_band", "income_band"];

fn profile_header() -> Vec<String> {
    let mut h = vec!["household_id".to_string(), "date".to_string()];
    h.extend((0..HOURS).map(|i| format!("v{i}")));
    h
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<File> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map_err(|e| Error::io(path, e))
}

pub fn read_profiles(path: &Path) -> Result<ProfileDataset> {
    read_profiles_from(open(path)?, path)
}

/// Parses profiles from `reader`; `path` only labels errors.
pub fn read_profiles_from<R: Read>(reader: R, path: &Path) -> Result<ProfileDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| Error::parse(path, e))?.clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::parse(path, "file is empty"));
    }
    let expected = profile_header();
    if header.len() != expected.len()
        || !header[0].eq_ignore_ascii_case("household_id")
        || !header[1].eq_ignore_ascii_case("date")
    {
        return Err(Error::parse(
            path,
            format!("header must be `{}`", expected.join(",")),
        ));
    }
    let mut profiles = Vec::new();
    let mut record = csv::StringRecord::new();
    loop {
        let more = rdr
            .read_record(&mut record)
            .map_err(|e| Error::parse(path, e))?;
        if !more {
            break;
        }
        let row = record.position().map_or(0, |p| p.line());
        let bad = |message: String| Error::Record {
            path: path.into(),
            row,
            message,
        };
        if record.len() != expected.len() {
            return Err(bad(format!(
                "expected {} fields, found {}",
                expected.len(),
                record.len()
            )));
        }
        let date: CivilDate = record[1]
            .parse()
            .map_err(|_| bad(format!("invalid date `{}`", &record[1])))?;
        let mut values = [0.0; HOURS];
        for (i, v) in values.iter_mut().enumerate() {
            let field = &record[2 + i];
            *v = field
                .parse()
                .map_err(|_| bad(format!("v{i} is not a number: `{field}`")))?;
        }
        let profile = DailyLoadProfile::new(HouseholdId::new(&record[0]), date, values)
            .map_err(|e| bad(e.to_string()))?;
        profiles.push(profile);
    }
    if profiles.is_empty() {
        return Err(Error::parse(path, "no profile rows"));
    }
    Ok(ProfileDataset::new(profiles))
}

/// Creates `path` (and its directory) and fills it through a CSV writer.
pub(crate) fn write_csv<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut csv::Writer<File>) -> csv::Result<()>,
{
    let mut w = csv::Writer::from_writer(create(path)?);
    fill(&mut w)
        .and_then(|()| w.flush().map_err(csv::Error::from))
        .map_err(|e| Error::parse(path, e))
}

pub fn write_profiles(path: &Path, dataset: &ProfileDataset) -> Result<()> {
    write_csv(path, |w| write_profile_records(w, dataset))
}

pub fn write_profiles_to<W: Write>(writer: W, dataset: &ProfileDataset) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    write_profile_records(&mut w, dataset)?;
    w.flush()?;
    Ok(())
}

fn write_profile_records<W: Write>(
    w: &mut csv::Writer<W>,
    dataset: &ProfileDataset,
) -> csv::Result<()> {
    w.write_record(profile_header())?;
    for p in dataset.profiles() {
        let mut rec = vec![p.household().to_string(), p.date().to_string()];
        rec.extend(p.values().iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    Ok(())
}

pub fn read_survey(path: &Path) -> Result<Vec<SurveyRecord>> {
    read_survey_from(open(path)?, path)
}

pub fn read_survey_from<R: Read>(reader: R, path: &Path) -> Result<Vec<SurveyRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| Error::parse(path, e))?.clone();
    if header.len() != SURVEY_HEADER.len()
        || header
            .iter()
            .zip(SURVEY_HEADER)
            .any(|(a, b)| !a.eq_ignore_ascii_case(b))
    {
        return Err(Error::parse(
            path,
            format!("header must be `{}`", SURVEY_HEADER.join(",")),
        ));
    }
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    let mut record = csv::StringRecord::new();
    while rdr
        .read_record(&mut record)
        .map_err(|e| Error::parse(path, e))?
    {
        let row = record.position().map_or(0, |p| p.line());
        let bad = |message: String| Error::Record {
            path: path.into(),
            row,
            message,
        };
        if record.len() != SURVEY_HEADER.len() {
            return Err(bad(format!(
                "expected {} fields, found {}",
                SURVEY_HEADER.len(),
                record.len()
            )));
        }
        if !seen.insert(record[0].to_string()) {
            return Err(bad(format!("duplicate household `{}`", &record[0])));
        }
        let vocab = |e: loadarch_core::Error| bad(e.to_string());
        out.push(SurveyRecord {
            household: HouseholdId::new(&record[0]),
            water: record[1].parse().map_err(&vocab)?,
            wall: record[2].parse().map_err(&vocab)?,
            floor_area: record[3].parse().map_err(&vocab)?,
            income: record[4].parse().map_err(&vocab)?,
        });
    }
    Ok(out)
}

pub fn write_survey(path: &Path, survey: &[SurveyRecord]) -> Result<()> {
    write_csv(path, |w| {
        w.write_record(SURVEY_HEADER)?;
        for r in survey {
            w.write_record([
                r.household.as_str(),
                r.water.as_str(),
                r.wall.as_str(),
                r.floor_area.as_str(),
                r.income.as_str(),
            ])?;
        }
        Ok(())
    })
}

/// Ground truth of a synthetic dataset: group and planted pattern per row.
pub fn write_truth(path: &Path, synth: &SyntheticDataset) -> Result<()> {
    write_csv(path, |w| {
        w.write_record(["row", "household_id", "date", "group", "pattern"])?;
        for (row, p) in synth.dataset.profiles().iter().enumerate() {
            w.write_record([
                row.to_string(),
                p.household().to_string(),
                p.date().to_string(),
                synth.group_labels[row].to_string(),
                synth.pattern_labels[row].to_string(),
            ])?;
        }
        Ok(())
    })
}
