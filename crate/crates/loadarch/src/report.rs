//! Score card and measure tables.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use loadarch_core::scoring::{
    score_experiments, ExperimentMeasures, RankingRules, ScoreCard, WeightProfile,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::write_csv;
use crate::suite::{read_json, write_json, CellEntry, CellStatus, RunManifest};

/// Score card together with the CI score of every scored experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub card: ScoreCard,
    pub rules: RankingRules,
    pub ci: Vec<Option<f64>>,
    /// Rank by CI among the scored experiments, lowest CI first.
    pub ci_rank: Vec<Option<usize>>,
}

impl ScoreReport {
    pub fn new(card: ScoreCard, rules: RankingRules, ci: Vec<Option<f64>>) -> Self {
        let mut idx: Vec<usize> = (0..ci.len()).filter(|&i| ci[i].is_some()).collect();
        idx.sort_by(|&a, &b| ci[a].unwrap().total_cmp(&ci[b].unwrap()).then(a.cmp(&b)));
        let mut ci_rank = vec![None; ci.len()];
        for (r, &i) in idx.iter().enumerate() {
            ci_rank[i] = Some(r + 1);
        }
        Self {
            card,
            rules,
            ci,
            ci_rank,
        }
    }

    /// Measures as rows with their weights, experiments as columns, then the
    /// totals, the final rank and the CI comparison. Columns are labelled
    /// `E1..En`; a legend maps them to experiment ids.
    pub fn render(&self) -> String {
        let card = &self.card;
        let n = card.experiments.len();
        let width = 9;
        let mut out = String::new();
        let _ = write!(out, "{:<22}{:>7}", "measure", "weight");
        for j in 0..n {
            let _ = write!(out, "{:>width$}", format!("E{}", j + 1));
        }
        out.push('\n');
        for (m, w) in &card.weights.weights {
            let _ = write!(out, "{:<22}{:>7}", m.as_str(), fmt_num(*w));
            for r in &card.ranks[m] {
                let _ = write!(out, "{:>width$}", fmt_num(*r));
            }
            out.push('\n');
        }
        let _ = write!(out, "{:<29}", "SCORE");
        for t in &card.totals {
            let _ = write!(out, "{:>width$.2}", t);
        }
        out.push('\n');
        let row = |out: &mut String, label: &str, cells: Vec<String>| {
            let _ = write!(out, "{label:<29}");
            for c in cells {
                let _ = write!(out, "{c:>width$}");
            }
            out.push('\n');
        };
        row(
            &mut out,
            "final rank",
            card.final_rank().iter().map(usize::to_string).collect(),
        );
        row(
            &mut out,
            "CI",
            self.ci
                .iter()
                .map(|c| c.map_or("-".into(), |v| format!("{v:.4}")))
                .collect(),
        );
        row(
            &mut out,
            "CI rank",
            self.ci_rank
                .iter()
                .map(|r| r.map_or("-".into(), |v| v.to_string()))
                .collect(),
        );
        out.push('\n');
        for (p, &e) in card.order.iter().enumerate() {
            let _ = writeln!(
                out,
                "{:>3}. E{:<4}{:>10.2}  {}{}",
                p + 1,
                e + 1,
                card.totals[e],
                card.experiments[e],
                if card.scorable[e] {
                    ""
                } else {
                    "  (not scorable)"
                }
            );
        }
        out
    }

    pub fn write(&self, out_dir: &Path) -> Result<()> {
        let txt = out_dir.join("scorecard.txt");
        fs::write(&txt, self.render()).map_err(|e| Error::io(&txt, e))?;
        let card = &self.card;
        write_csv(&out_dir.join("scorecard.csv"), |w| {
            let mut header = vec!["measure".to_string(), "weight".to_string()];
            header.extend(card.experiments.iter().cloned());
            w.write_record(&header)?;
            for (m, wt) in &card.weights.weights {
                let mut rec = vec![m.as_str().to_string(), wt.to_string()];
                rec.extend(card.ranks[m].iter().map(f64::to_string));
                w.write_record(&rec)?;
            }
            let mut line = |label: &str, cells: Vec<String>| {
                let mut rec = vec![label.to_string(), String::new()];
                rec.extend(cells);
                w.write_record(&rec)
            };
            line("score", card.totals.iter().map(f64::to_string).collect())?;
            line(
                "final_rank",
                card.final_rank().iter().map(usize::to_string).collect(),
            )?;
            line(
                "ci",
                self.ci
                    .iter()
                    .map(|c| c.map(|v| v.to_string()).unwrap_or_default())
                    .collect(),
            )?;
            line(
                "ci_rank",
                self.ci_rank
                    .iter()
                    .map(|c| c.map(|v| v.to_string()).unwrap_or_default())
                    .collect(),
            )
        })?;
        write_json(&out_dir.join("scorecard.json"), self)
    }

    pub fn read(out_dir: &Path) -> Result<Self> {
        read_json(&out_dir.join("scorecard.json"))
    }
}

fn fmt_num(v: f64) -> String {
    if v == v.trunc() {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

pub(crate) fn write_scorecard(
    out_dir: &Path,
    card: &ScoreCard,
    rules: &RankingRules,
    ci: &[Option<f64>],
) -> Result<ScoreReport> {
    let report = ScoreReport::new(card.clone(), rules.clone(), ci.to_vec());
    report.write(out_dir)?;
    Ok(report)
}

pub(crate) fn write_internal_csv(path: &Path, entries: &[CellEntry]) -> Result<()> {
    write_csv(path, |w| {
        w.write_record([
            "cell",
            "experiment",
            "status",
            "clusters",
            "ci",
            "ci_rank",
            "evaluated",
        ])?;
        for e in entries {
            let opt = |v: Option<String>| v.unwrap_or_default();
            w.write_record([
                e.id.clone(),
                e.experiment.clone(),
                match e.status {
                    CellStatus::Done => "done".into(),
                    CellStatus::Failed => "failed".into(),
                },
                opt(e.n_clusters.map(|v| v.to_string())),
                opt(e.ci.map(|v| v.to_string())),
                opt(e.ci_rank.map(|v| v.to_string())),
                e.evaluated.to_string(),
            ])?;
        }
        Ok(())
    })
}

const ERROR_PARTS: [&str; 4] = ["mape", "mdape", "abs_mdlq", "mdsyma"];
const ENTROPY_PARTS: [&str; 4] = ["daytype", "month", "total_demand", "peak_demand"];

/// `measures.csv` for reading and `measures.json` for rescoring.
pub(crate) fn write_measures(out_dir: &Path, measures: &[ExperimentMeasures]) -> Result<()> {
    write_json(&out_dir.join("measures.json"), measures)?;
    write_csv(&out_dir.join("measures.csv"), |w| {
        let mut header: Vec<String> = [
            "cell",
            "scorable",
            "qualifying_clusters",
            "zero_profile",
            "threshold_ratio",
        ]
        .map(String::from)
        .to_vec();
        header.extend(ERROR_PARTS.map(|p| format!("total_{p}")));
        header.extend(ERROR_PARTS.map(|p| format!("peak_{p}")));
        header.push("peak_coincidence".into());
        header.extend(ENTROPY_PARTS.map(|p| format!("entropy_{p}")));
        w.write_record(&header)?;
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        for m in measures {
            let mut rec = vec![
                m.experiment.clone(),
                m.scorable.to_string(),
                m.qualifying_clusters.to_string(),
                m.zero_profile.to_string(),
                m.threshold_ratio.to_string(),
            ];
            rec.extend(m.total_error.map(opt));
            rec.extend(m.peak_error.map(opt));
            rec.push(opt(m.peak_coincidence));
            rec.extend(m.entropy.map(opt));
            w.write_record(&rec)?;
        }
        Ok(())
    })
}

/// Rebuilds the score card of a finished run from its persisted measures,
/// optionally with other weights or directions.
pub fn rescore(
    out_dir: &Path,
    weights: Option<&WeightProfile>,
    rules: Option<&RankingRules>,
) -> Result<ScoreReport> {
    let manifest = RunManifest::read(out_dir)?;
    let measures: Vec<ExperimentMeasures> = read_json(&out_dir.join("measures.json"))?;
    let previous = ScoreReport::read(out_dir).ok();
    let weights = weights
        .cloned()
        .or_else(|| previous.as_ref().map(|p| p.card.weights.clone()))
        .unwrap_or_default();
    let rules = rules
        .cloned()
        .or_else(|| previous.as_ref().map(|p| p.rules.clone()))
        .unwrap_or_default();
    let card = score_experiments(&measures, &weights, &rules)?;
    let ci = measures
        .iter()
        .map(|m| Ok(manifest.cell(&m.experiment)?.ci))
        .collect::<Result<Vec<_>>>()?;
    write_scorecard(out_dir, &card, &rules, &ci)
}
