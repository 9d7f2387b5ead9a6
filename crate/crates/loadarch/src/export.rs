//! Plot data of finished cells.

use std::path::{Path, PathBuf};

use loadarch_core::date::Weekday;

use crate::error::{Error, Result};
use crate::io::write_csv;
use crate::suite::{cell_dir, load_cell_external, RunManifest};

/// Writes `cluster,members,mon..sun`, one row per cluster holding its
/// day-type likelihood. Defaults to `cells/<id>/daytype_likelihood.csv`.
pub fn export_daytype_likelihood(out_dir: &Path, id: &str, dest: Option<&Path>) -> Result<PathBuf> {
    let manifest = RunManifest::read(out_dir)?;
    let report = load_cell_external(out_dir, &manifest, id)?;
    let path = dest.map_or_else(
        || cell_dir(out_dir, id).join("daytype_likelihood.csv"),
        Path::to_path_buf,
    );
    write_csv(&path, |w| {
        let mut header = vec!["cluster".to_string(), "members".to_string()];
        header.extend(Weekday::ALL.iter().map(|d| d.as_str().to_string()));
        w.write_record(&header)?;
        for c in &report.clusters {
            let mut rec = vec![c.cluster.to_string(), c.member_count.to_string()];
            rec.extend(c.daytype_likelihood.iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
        Ok(())
    })?;
    Ok(path)
}

/// Writes the representative profiles of a cell in long form,
/// `cluster,members,hour,value`, for line plots.
pub fn export_rdlps(out_dir: &Path, id: &str, dest: Option<&Path>) -> Result<PathBuf> {
    let manifest = RunManifest::read(out_dir)?;
    let source = cell_dir(out_dir, manifest.cell(id)?.id.as_str()).join("rdlps.csv");
    let mut reader = csv::Reader::from_path(&source).map_err(|e| Error::parse(&source, e))?;
    let rows: Vec<csv::StringRecord> = reader
        .records()
        .collect::<csv::Result<_>>()
        .map_err(|e| Error::parse(&source, e))?;
    let path = dest.map_or_else(
        || cell_dir(out_dir, id).join("rdlps_long.csv"),
        Path::to_path_buf,
    );
    write_csv(&path, |w| {
        w.write_record(["cluster", "members", "hour", "value"])?;
        for r in &rows {
            for (h, v) in r.iter().skip(2).enumerate() {
                w.write_record([&r[0], &r[1], &h.to_string(), v])?;
            }
        }
        Ok(())
    })?;
    Ok(path)
}
