//! Experiment-suite runner and its persisted layout.
//!
//! ```text
//! <out>/manifest.json              run id, digests, one entry per cell
//! <out>/manifest.timestamps.json   wall-clock times, kept apart so the
//!                                  manifest itself is reproducible
//! <out>/data/                      generated inputs (synthetic data only)
//! <out>/cells/<id>/model.json      fitted model, labels included
//! <out>/cells/<id>/internal.json   per-bin indices and CI score
//! <out>/cells/<id>/rdlps.csv       cluster,members,h00..h23
//! <out>/cells/<id>/clusters.csv    row,household_id,date,cluster
//! <out>/cells/<id>/external.json   cluster measures (evaluated cells only)
//! <out>/internal.csv               cell,status,bins,clusters,ci,ci_rank
//! <out>/measures.{csv,json}        experiment-level measures
//! <out>/scorecard.{txt,csv,json}   score card of the evaluated cells
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::time::{SystemTime, UNIX_EPOCH};

use loadarch_core::cluster::{build_rdlps, run_experiment, ClusterModel};
use loadarch_core::data::{ProfileDataset, SeasonMap};
use loadarch_core::external::{evaluate_external, ExternalReport};
use loadarch_core::internal::{evaluate_internal, InternalScores};
use loadarch_core::scoring::{
    aggregate_experiment_measures, score_experiments, ExperimentMeasures, ScoreCard,
};
use loadarch_core::survey::SurveyRecord;
use loadarch_core::synth::synthesize_dataset;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{parse_generator, preset_spec, Cell, EvaluationConfig, SuiteConfig};
use crate::error::{Error, Result};
use crate::io::{
    read_profiles, read_survey, write_csv, write_profiles, write_profiles_to, write_survey,
    write_truth,
};
use crate::report;

pub const MANIFEST: &str = "manifest.json";
pub const TIMESTAMPS: &str = "manifest.timestamps.json";

/// Command-line overrides of a suite file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub top_k: Option<usize>,
    pub threads: Option<usize>,
}

/// A suite file with its overrides applied.
#[derive(Debug, Clone)]
pub struct Suite {
    pub config: SuiteConfig,
    /// Directory relative data paths are resolved against.
    pub base: PathBuf,
    pub config_digest: String,
    pub threads: Option<usize>,
}

impl Suite {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let text = std::str::from_utf8(&bytes).map_err(|e| Error::parse(path, e))?;
        let mut config = SuiteConfig::from_toml(text, path)?;
        if let Some(seed) = overrides.seed {
            config.seed = seed;
        }
        if overrides.top_k.is_some() {
            config.top_k = overrides.top_k;
        }
        config.validate()?;
        config.cells()?;
        Ok(Self {
            config,
            base: path.parent().map(Path::to_path_buf).unwrap_or_default(),
            config_digest: sha256_hex(&bytes),
            threads: overrides.threads,
        })
    }

    pub fn from_config(config: SuiteConfig, base: PathBuf) -> Result<Self> {
        config.validate()?;
        config.cells()?;
        let text = toml::to_string(&config).map_err(|e| Error::Config(e.to_string()))?;
        Ok(Self {
            config_digest: sha256_hex(text.as_bytes()),
            config,
            base,
            threads: None,
        })
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    /// Reads the input files, or generates the synthetic data and writes it
    /// under `<out>/data`.
    pub fn load_data(&self, out_dir: &Path) -> Result<SuiteData> {
        let d = &self.config.data;
        let (dataset, survey, seasons) = match &d.generate {
            Some(g) => {
                let spec = match (&g.preset, &g.spec) {
                    (Some(p), _) => preset_spec(p, g.households_per_group)?,
                    (None, Some(f)) => {
                        let f = self.resolve(f);
                        let text = fs::read_to_string(&f).map_err(|e| Error::io(&f, e))?;
                        parse_generator(&text, &f)?
                    }
                    (None, None) => unreachable!("validated"),
                };
                let synth = synthesize_dataset(&spec, g.seed.unwrap_or(self.config.seed))?;
                let dir = out_dir.join("data");
                write_profiles(&dir.join("profiles.csv"), &synth.dataset)?;
                write_survey(&dir.join("survey.csv"), &synth.survey)?;
                write_truth(&dir.join("truth.csv"), &synth)?;
                let seasons = spec.season_map()?;
                let survey = (!synth.survey.is_empty()).then_some(synth.survey);
                (synth.dataset, survey, seasons)
            }
            None => {
                let profiles = d.profiles.as_ref().expect("validated");
                let dataset = read_profiles(&self.resolve(profiles))?;
                let survey = match &d.survey {
                    Some(s) => Some(read_survey(&self.resolve(s))?),
                    None => None,
                };
                let seasons = match &d.winter_months {
                    Some(m) => SeasonMap::with_winter_months(m)?,
                    None => SeasonMap::default(),
                };
                (dataset, survey, seasons)
            }
        };
        if dataset.is_empty() {
            return Err(Error::Config("dataset has no profiles".into()));
        }
        let digest = data_digest(&dataset, survey.as_deref(), &seasons)?;
        Ok(SuiteData {
            dataset,
            survey,
            seasons,
            digest,
        })
    }
}

pub struct SuiteData {
    pub dataset: ProfileDataset,
    pub survey: Option<Vec<SurveyRecord>>,
    pub seasons: SeasonMap,
    pub digest: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn data_digest(
    dataset: &ProfileDataset,
    survey: Option<&[SurveyRecord]>,
    seasons: &SeasonMap,
) -> Result<String> {
    let mut h = Sha256::new();
    let mut buf = Vec::new();
    write_profiles_to(&mut buf, dataset).map_err(|e| Error::Config(e.to_string()))?;
    h.update(&buf);
    if let Some(s) = survey {
        h.update(to_json(s)?);
    }
    h.update(to_json(seasons)?);
    Ok(hex::encode(h.finalize()))
}

fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    serde_json::to_vec(value).map_err(|e| Error::Config(e.to_string()))
}

/// Digest of everything a cell's persisted results depend on.
pub fn cell_digest(
    cell: &Cell,
    evaluation: &EvaluationConfig,
    data_digest: &str,
) -> Result<String> {
    #[derive(Serialize)]
    struct Key<'a> {
        cell: &'a Cell,
        evaluation: &'a EvaluationConfig,
        data: &'a str,
    }
    Ok(sha256_hex(&to_json(&Key {
        cell,
        evaluation,
        data: data_digest,
    })?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellEntry {
    pub id: String,
    pub experiment: String,
    pub digest: String,
    pub status: CellStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_clusters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_rank: Option<usize>,
    /// Whether external measures were computed.
    #[serde(default)]
    pub evaluated: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_rank: Option<usize>,
    /// Paths relative to the output directory.
    #[serde(default)]
    pub artifacts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub config_digest: String,
    pub data_digest: String,
    pub seed: u64,
    /// Cells evaluated externally; `None` means all.
    pub top_k: Option<usize>,
    /// One entry per finished cell, in grid order.
    pub cells: Vec<CellEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scorecard: Option<String>,
}

impl RunManifest {
    pub fn read(out_dir: &Path) -> Result<Self> {
        read_json(&out_dir.join(MANIFEST))
    }

    pub fn cell(&self, id: &str) -> Result<&CellEntry> {
        self.cells
            .iter()
            .find(|c| c.id == id)
            .ok_or_else(|| Error::UnknownExperiment(id.into()))
    }

    pub fn failures(&self) -> usize {
        self.cells
            .iter()
            .filter(|c| c.status == CellStatus::Failed)
            .count()
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CellTimes {
    pub started_ms: u64,
    pub finished_ms: u64,
    /// Loaded from an earlier run instead of recomputed.
    pub resumed: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RunTimestamps {
    pub run_id: String,
    pub started_ms: u64,
    pub finished_ms: u64,
    pub cells: BTreeMap<String, CellTimes>,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

pub(crate) fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e))
}

/// Writes pretty JSON through a temporary file and a rename.
pub(crate) fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    text.push('\n');
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn cell_dir(out_dir: &Path, id: &str) -> PathBuf {
    out_dir.join("cells").join(id)
}

const CELL_FILES: [&str; 4] = ["model.json", "internal.json", "rdlps.csv", "clusters.csv"];

struct Fitted {
    model: ClusterModel,
    internal: InternalScores,
}

fn fit_cell(
    cell: &Cell,
    data: &SuiteData,
    evaluation: &EvaluationConfig,
    dir: &Path,
) -> Result<Fitted> {
    cell.config.validate()?;
    let model = run_experiment(&data.dataset, &cell.config)?;
    let internal = evaluate_internal(&model, &data.dataset, &evaluation.silhouette)?;
    write_json(&dir.join("model.json"), &model)?;
    write_json(&dir.join("internal.json"), &internal)?;
    write_csv(&dir.join("rdlps.csv"), |w| {
        let mut header = vec!["cluster".to_string(), "members".to_string()];
        header.extend((0..24).map(|h| format!("h{h:02}")));
        w.write_record(&header)?;
        for r in build_rdlps(&model, &data.dataset) {
            let mut rec = vec![r.cluster.to_string(), r.member_count.to_string()];
            rec.extend(r.values.iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
        Ok(())
    })?;
    write_csv(&dir.join("clusters.csv"), |w| {
        w.write_record(["row", "household_id", "date", "cluster"])?;
        for (row, (p, l)) in data
            .dataset
            .profiles()
            .iter()
            .zip(&model.labels)
            .enumerate()
        {
            let cluster = l.map(|c| c.to_string()).unwrap_or_default();
            w.write_record([
                row.to_string(),
                p.household().to_string(),
                p.date().to_string(),
                cluster,
            ])?;
        }
        Ok(())
    })?;
    Ok(Fitted { model, internal })
}

fn reuse_cell(previous: Option<&CellEntry>, digest: &str, dir: &Path) -> Option<Fitted> {
    let prev = previous?;
    if prev.status != CellStatus::Done || prev.digest != digest {
        return None;
    }
    if !CELL_FILES.iter().all(|f| dir.join(f).is_file()) {
        return None;
    }
    Some(Fitted {
        model: read_json(&dir.join("model.json")).ok()?,
        internal: read_json(&dir.join("internal.json")).ok()?,
    })
}

fn artifacts(id: &str, names: &[&str]) -> Vec<String> {
    names.iter().map(|n| format!("cells/{id}/{n}")).collect()
}

/// Outcome of a suite run.
pub struct SuiteRun {
    pub manifest: RunManifest,
    pub scorecard: Option<ScoreCard>,
    pub measures: Vec<ExperimentMeasures>,
}

/// Runs every cell, evaluates the best `top_k` by CI externally, scores them
/// and persists everything under `out_dir`. Cells already completed by an
/// earlier run with the same digest are loaded instead of refitted. A failing
/// cell is recorded in the manifest and does not stop the others.
pub fn run_suite(suite: &Suite, out_dir: &Path) -> Result<SuiteRun> {
    let started = now_ms();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let config = &suite.config;
    let cells = config.cells()?;
    let data = suite.load_data(out_dir)?;
    let previous: BTreeMap<String, CellEntry> = RunManifest::read(out_dir)
        .map(|m| m.cells.into_iter().map(|c| (c.id.clone(), c)).collect())
        .unwrap_or_default();
    let digests = cells
        .iter()
        .map(|c| cell_digest(c, &config.evaluation, &data.digest))
        .collect::<Result<Vec<_>>>()?;
    let run_id =
        sha256_hex(format!("{}:{}:{}", suite.config_digest, data.digest, config.seed).as_bytes())
            [..16]
            .to_string();
    let mut manifest = RunManifest {
        run_id: run_id.clone(),
        config_digest: suite.config_digest.clone(),
        data_digest: data.digest.clone(),
        seed: config.seed,
        top_k: config.top_k.filter(|&k| k > 0),
        cells: Vec::new(),
        scorecard: None,
    };
    let mut times = RunTimestamps {
        run_id,
        started_ms: started,
        ..Default::default()
    };

    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(t) = suite.threads.filter(|&t| t > 0) {
            b = b.num_threads(t);
        }
        b.build().map_err(|e| Error::Config(e.to_string()))?
    };
    let pool = &pool;

    // Workers fit cells; this thread is the only one writing the manifest.
    let (tx, rx) = mpsc::channel::<(usize, CellEntry, CellTimes, Option<Fitted>)>();
    let mut fitted: Vec<Option<Fitted>> = (0..cells.len()).map(|_| None).collect();
    let mut entries: Vec<Option<CellEntry>> = vec![None; cells.len()];
    std::thread::scope(|scope| -> Result<()> {
        let (cells, digests, data, previous) = (&cells, &digests, &data, &previous);
        scope.spawn(move || {
            pool.install(|| {
                (0..cells.len()).into_par_iter().for_each_with(tx, |tx, i| {
                    let cell = &cells[i];
                    let dir = cell_dir(out_dir, &cell.id);
                    let t0 = now_ms();
                    let reused = reuse_cell(previous.get(&cell.id), &digests[i], &dir);
                    let resumed = reused.is_some();
                    let result = match reused {
                        Some(f) => Ok(f),
                        None => fit_cell(cell, data, &config.evaluation, &dir),
                    };
                    let mut entry = CellEntry {
                        id: cell.id.clone(),
                        experiment: cell.experiment.clone(),
                        digest: digests[i].clone(),
                        status: CellStatus::Done,
                        error: None,
                        n_clusters: None,
                        ci: None,
                        ci_rank: None,
                        evaluated: false,
                        score: None,
                        final_rank: None,
                        artifacts: Vec::new(),
                    };
                    let fitted = match result {
                        Ok(f) => {
                            entry.n_clusters = Some(f.model.n_clusters());
                            entry.ci = f.internal.ci;
                            entry.artifacts = artifacts(&cell.id, &CELL_FILES);
                            Some(f)
                        }
                        Err(e) => {
                            entry.status = CellStatus::Failed;
                            entry.error = Some(e.to_string());
                            None
                        }
                    };
                    let t = CellTimes {
                        started_ms: t0,
                        finished_ms: now_ms(),
                        resumed,
                    };
                    // The receiver outlives every worker.
                    let _ = tx.send((i, entry, t, fitted));
                });
            });
        });
        for (i, entry, t, f) in rx {
            times.cells.insert(entry.id.clone(), t);
            entries[i] = Some(entry);
            fitted[i] = f;
            manifest.cells = entries.iter().flatten().cloned().collect();
            write_json(&out_dir.join(MANIFEST), &manifest)?;
        }
        Ok(())
    })?;
    let mut entries: Vec<CellEntry> = entries
        .into_iter()
        .map(|e| e.expect("every cell reports"))
        .collect();

    // CI ranks over the cells that have a score, lowest first.
    let mut by_ci: Vec<usize> = (0..entries.len())
        .filter(|&i| entries[i].ci.is_some())
        .collect();
    by_ci.sort_by(|&a, &b| {
        entries[a]
            .ci
            .unwrap()
            .total_cmp(&entries[b].ci.unwrap())
            .then(a.cmp(&b))
    });
    for (r, &i) in by_ci.iter().enumerate() {
        entries[i].ci_rank = Some(r + 1);
    }

    // External stage on the best cells by CI; completed cells without a CI
    // follow in grid order.
    let mut ranked = by_ci.clone();
    ranked.extend(
        (0..entries.len())
            .filter(|&i| entries[i].status == CellStatus::Done && entries[i].ci.is_none()),
    );
    if let Some(k) = manifest.top_k {
        ranked.truncate(k);
    }
    ranked.sort_unstable();
    let external = config.evaluation.external();
    let reports: Vec<(usize, Result<ExternalReport>)> = pool.install(|| {
        ranked
            .par_iter()
            .map(|&i| {
                let model = &fitted[i].as_ref().expect("done cell").model;
                let report = evaluate_external(model, &data.dataset, &external)
                    .map_err(Error::from)
                    .and_then(|r| {
                        write_json(&cell_dir(out_dir, &entries[i].id).join("external.json"), &r)?;
                        Ok(r)
                    });
                (i, report)
            })
            .collect()
    });
    let mut measures = Vec::new();
    let mut measured = Vec::new();
    for (i, report) in reports {
        match report {
            Ok(r) => {
                entries[i].evaluated = true;
                let extra = artifacts(&entries[i].id, &["external.json"]);
                entries[i].artifacts.extend(extra);
                measures.push(aggregate_experiment_measures(
                    &entries[i].id,
                    &r,
                    r.usability.threshold,
                ));
                measured.push(i);
            }
            Err(e) => {
                entries[i].status = CellStatus::Failed;
                entries[i].error = Some(e.to_string());
            }
        }
    }

    report::write_internal_csv(&out_dir.join("internal.csv"), &entries)?;
    report::write_measures(out_dir, &measures)?;
    let scorecard = if measures.len() >= 2 {
        let rules = config.evaluation.rules();
        let card = score_experiments(&measures, &config.evaluation.weights(), &rules)?;
        let final_rank = card.final_rank();
        for (j, &i) in measured.iter().enumerate() {
            entries[i].score = Some(card.totals[j]);
            entries[i].final_rank = Some(final_rank[j]);
        }
        let ci: Vec<Option<f64>> = measured.iter().map(|&i| entries[i].ci).collect();
        report::write_scorecard(out_dir, &card, &rules, &ci)?;
        manifest.scorecard = Some("scorecard.json".into());
        Some(card)
    } else {
        None
    };

    manifest.cells = entries;
    write_json(&out_dir.join(MANIFEST), &manifest)?;
    times.finished_ms = now_ms();
    write_json(&out_dir.join(TIMESTAMPS), &times)?;
    Ok(SuiteRun {
        manifest,
        scorecard,
        measures,
    })
}

/// Model and data of one completed cell of a persisted run.
pub fn load_cell_model(out_dir: &Path, manifest: &RunManifest, id: &str) -> Result<ClusterModel> {
    let entry = manifest.cell(id)?;
    if entry.status != CellStatus::Done {
        return Err(Error::Config(format!("cell `{id}` did not complete")));
    }
    read_json(&cell_dir(out_dir, id).join("model.json"))
}

pub fn load_cell_external(
    out_dir: &Path,
    manifest: &RunManifest,
    id: &str,
) -> Result<ExternalReport> {
    let entry = manifest.cell(id)?;
    if !entry.evaluated {
        return Err(Error::Config(format!(
            "cell `{id}` has no external measures"
        )));
    }
    read_json(&cell_dir(out_dir, id).join("external.json"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_suite(extra: &str) -> Suite {
        let text = format!(
            r#"
seed = 5
[data.generate]
preset = "three_group"
households_per_group = 4
[evaluation]
threshold = 10
[[experiment]]
name = "km"
algorithm = "kmeans"
m = [2, 3]
normalization = ["unit", "zero_one"]
{extra}
"#
        );
        let config = SuiteConfig::from_toml(&text, Path::new("t.toml")).unwrap();
        Suite::from_config(config, PathBuf::new()).unwrap()
    }

    #[test]
    fn runs_and_persists_every_cell() {
        let dir = tempfile::tempdir().unwrap();
        let run = run_suite(&tiny_suite(""), dir.path()).unwrap();
        assert_eq!(run.manifest.cells.len(), 4);
        assert_eq!(run.manifest.failures(), 0);
        assert!(run.scorecard.is_some());
        let persisted = RunManifest::read(dir.path()).unwrap();
        assert_eq!(persisted, run.manifest);
        for c in &persisted.cells {
            for a in &c.artifacts {
                assert!(dir.path().join(a).is_file(), "{a}");
            }
            assert!(c.evaluated && c.final_rank.is_some() && c.ci_rank.is_some());
        }
        assert!(dir.path().join("data/truth.csv").is_file());
    }

    #[test]
    fn failing_cell_is_isolated() {
        let extra = r#"
[[experiment]]
name = "bad"
algorithm = "som_kmeans"
s = 2
m = 4
normalization = "unit"
"#;
        let dir = tempfile::tempdir().unwrap();
        let run = run_suite(&tiny_suite(extra), dir.path()).unwrap();
        assert_eq!(run.manifest.cells.len(), 5);
        assert_eq!(run.manifest.failures(), 1);
        let bad = run.manifest.cell("bad.unit.none.z0.s2.m4").unwrap();
        assert!(bad.error.as_deref().unwrap().contains("s^2 > m"));
        assert_eq!(run.scorecard.unwrap().experiments.len(), 4);
    }

    #[test]
    fn resume_reuses_completed_cells() {
        let dir = tempfile::tempdir().unwrap();
        let suite = tiny_suite("");
        let first = run_suite(&suite, dir.path()).unwrap();
        let second = run_suite(&suite, dir.path()).unwrap();
        assert_eq!(first.manifest, second.manifest);
        let times: RunTimestamps = read_json(&dir.path().join(TIMESTAMPS)).unwrap();
        assert!(times.cells.values().all(|t| t.resumed));
    }

    #[test]
    fn top_k_limits_external_stage() {
        let dir = tempfile::tempdir().unwrap();
        let mut suite = tiny_suite("");
        suite.config.top_k = Some(2);
        let run = run_suite(&suite, dir.path()).unwrap();
        let evaluated: Vec<_> = run.manifest.cells.iter().filter(|c| c.evaluated).collect();
        assert_eq!(evaluated.len(), 2);
        assert!(evaluated.iter().all(|c| c.ci_rank.unwrap() <= 2));
    }

    #[test]
    fn digests_track_inputs() {
        let suite = tiny_suite("");
        let cells = suite.config.cells().unwrap();
        let e = &suite.config.evaluation;
        let a = cell_digest(&cells[0], e, "d").unwrap();
        assert_eq!(a, cell_digest(&cells[0], e, "d").unwrap());
        assert_ne!(a, cell_digest(&cells[1], e, "d").unwrap());
        assert_ne!(a, cell_digest(&cells[0], e, "x").unwrap());
    }
}
