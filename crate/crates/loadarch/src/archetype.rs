//! Archetype construction on a finished suite run.
//!
//! Outputs go to `<out>/archetypes/<cell>/`: `model.json` (fitted softmax
//! model with odds ratios), `odds_ratios.csv` (cluster by feature),
//! `associations.csv` (`cluster,attribute,value,odds_ratio`) and
//! `archetypes.{txt,json}`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use loadarch_core::archetype::{
    assemble_archetype, associate, build_training_set, fit_archetype_model, Archetype,
    ArchetypeModel, Association,
};
use loadarch_core::data::Season;
use loadarch_core::date::Weekday;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::write_csv;
use crate::suite::{load_cell_model, write_json, CellStatus, RunManifest, Suite};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedArchetype {
    pub name: String,
    pub archetype: Archetype,
    /// Where the representative profile of every listed cluster lives.
    pub rdlps: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArchetypeRun {
    pub cell: String,
    pub dir: PathBuf,
    pub model: ArchetypeModel,
    pub associations: Vec<Association>,
    pub archetypes: Vec<NamedArchetype>,
    pub skipped_unsurveyed: usize,
}

/// The configured cell, else the best of the score card, else the best by CI.
pub fn choose_cell(manifest: &RunManifest, configured: Option<&str>) -> Result<String> {
    if let Some(id) = configured {
        return Ok(manifest.cell(id)?.id.clone());
    }
    let done = manifest
        .cells
        .iter()
        .filter(|c| c.status == CellStatus::Done);
    if let Some(c) = done.clone().find(|c| c.final_rank == Some(1)) {
        return Ok(c.id.clone());
    }
    done.filter(|c| c.ci.is_some())
        .min_by(|a, b| a.ci.unwrap().total_cmp(&b.ci.unwrap()))
        .map(|c| c.id.clone())
        .ok_or_else(|| Error::Config("no completed cell to build archetypes from".into()))
}

pub fn run_archetypes(suite: &Suite, out_dir: &Path, cell: Option<&str>) -> Result<ArchetypeRun> {
    let settings = &suite.config.archetype;
    let filters = settings.resolved_filters()?;
    let manifest = RunManifest::read(out_dir)?;
    let data = suite.load_data(out_dir)?;
    if data.digest != manifest.data_digest {
        return Err(Error::Config(format!(
            "input data changed since run {}; rerun the suite first",
            manifest.run_id
        )));
    }
    let survey = data
        .survey
        .as_deref()
        .ok_or_else(|| Error::Config("archetypes need survey data".into()))?;
    let id = choose_cell(&manifest, cell.or(settings.cell.as_deref()))?;
    let model = load_cell_model(out_dir, &manifest, &id)?;
    let training = build_training_set(&data.dataset, &model.labels, survey, &data.seasons)?;
    let fitted = fit_archetype_model(&training, &settings.logistic)?;
    let associations = associate(&fitted, settings.threshold);
    let archetypes: Vec<NamedArchetype> = filters
        .into_iter()
        .map(|(name, filter)| NamedArchetype {
            name,
            archetype: assemble_archetype(&associations, &filter),
            rdlps: format!("cells/{id}/rdlps.csv"),
        })
        .collect();

    let dir = out_dir.join("archetypes").join(&id);
    write_json(&dir.join("model.json"), &fitted)?;
    write_csv(&dir.join("odds_ratios.csv"), |w| {
        let mut header = vec!["cluster".to_string()];
        header.extend(
            fitted
                .features
                .iter()
                .map(|f| format!("{}={}", f.attribute(), f.value())),
        );
        w.write_record(&header)?;
        for (c, cluster) in fitted.clusters.iter().enumerate() {
            let mut rec = vec![cluster.to_string()];
            rec.extend(fitted.odds_ratios.row(c).iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
        Ok(())
    })?;
    write_csv(&dir.join("associations.csv"), |w| {
        w.write_record(["cluster", "attribute", "value", "odds_ratio"])?;
        for a in &associations {
            w.write_record([
                a.cluster.to_string(),
                a.feature.attribute().to_string(),
                a.feature.value().to_string(),
                a.odds_ratio.to_string(),
            ])?;
        }
        Ok(())
    })?;
    write_json(&dir.join("archetypes.json"), &archetypes)?;
    let txt = dir.join("archetypes.txt");
    fs::write(
        &txt,
        render(&id, &archetypes, &fitted, training.skipped_unsurveyed),
    )
    .map_err(|e| Error::io(&txt, e))?;
    Ok(ArchetypeRun {
        cell: id,
        dir,
        model: fitted,
        associations,
        archetypes,
        skipped_unsurveyed: training.skipped_unsurveyed,
    })
}

/// Clusters, temporal tags and the season by day-type coverage matrix of
/// every archetype.
pub fn render(
    cell: &str,
    archetypes: &[NamedArchetype],
    model: &ArchetypeModel,
    skipped: usize,
) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "cell {cell}: {} clusters, {} iterations{}",
        model.clusters.len(),
        model.iterations,
        if model.converged {
            ""
        } else {
            " (not converged)"
        }
    );
    if skipped > 0 {
        let _ = writeln!(
            out,
            "{skipped} clustered profiles without a survey record were skipped"
        );
    }
    for a in archetypes {
        let groups: Vec<String> = a
            .archetype
            .filter
            .groups()
            .iter()
            .filter(|g| !g.is_empty())
            .map(|g| {
                let values: Vec<&str> = g.iter().map(|f| f.value()).collect();
                format!("{}={}", g[0].attribute(), values.join("|"))
            })
            .collect();
        let _ = writeln!(out, "\narchetype {} [{}]", a.name, groups.join(", "));
        if a.archetype.clusters.is_empty() {
            let _ = writeln!(out, "  no associated clusters");
        }
        for c in &a.archetype.clusters {
            let days: Vec<&str> = c.daytypes.iter().map(|d| d.as_str()).collect();
            let seasons: Vec<&str> = c.seasons.iter().map(|s| s.as_str()).collect();
            let _ = writeln!(
                out,
                "  cluster {:<4} daytypes: {:<28} seasons: {:<14} rdlp: {}#{}",
                c.cluster,
                if days.is_empty() {
                    "-".into()
                } else {
                    days.join(" ")
                },
                if seasons.is_empty() {
                    "-".into()
                } else {
                    seasons.join(" ")
                },
                a.rdlps,
                c.cluster
            );
        }
        let _ = write!(out, "  {:<8}", "");
        for d in Weekday::ALL {
            let _ = write!(out, "{:>10}", d.as_str());
        }
        out.push('\n');
        for s in Season::ALL {
            let _ = write!(out, "  {:<8}", s.as_str());
            for d in Weekday::ALL {
                let cell = a
                    .archetype
                    .coverage
                    .iter()
                    .find(|c| c.season == s && c.daytype == d)
                    .expect("full coverage matrix");
                let ids: Vec<String> = cell.clusters.iter().map(usize::to_string).collect();
                let text = if ids.is_empty() {
                    "-".into()
                } else {
                    ids.join(",")
                };
                let _ = write!(out, "{text:>10}");
            }
            out.push('\n');
        }
        let gaps = a.archetype.gaps();
        if !gaps.is_empty() {
            let list: Vec<String> = gaps.iter().map(|(s, d)| format!("{s}/{d}")).collect();
            let _ = writeln!(out, "  uncovered: {}", list.join(" "));
        }
    }
    out
}
