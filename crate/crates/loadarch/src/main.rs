use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use loadarch::config::{parse_generator, preset_spec};
use loadarch::error::{Error, Result};
use loadarch::suite::{run_suite, Overrides, Suite};
use loadarch::{archetype, export, io, report};
use loadarch_core::synth::synthesize_dataset;

/// Clustering experiments on daily electricity load profiles.
///
/// Exit codes: 0 success, 1 configuration error, 2 partial or runtime failure.
#[derive(Parser)]
#[command(name = "loadarch", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Suite file (TOML); for `generate`, a generator file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed of the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// External evaluation only for the best K cells by CI; 0 means all.
    #[arg(long, global = true)]
    top_k: Option<usize>,
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset with planted ground truth.
    Generate {
        /// Built-in generator used when no --config is given.
        #[arg(long, default_value = "three_group")]
        preset: String,
        #[arg(long)]
        households_per_group: Option<usize>,
    },
    /// Run every cell of a suite.
    Run,
    /// Rebuild the score card from a run's persisted measures.
    Score,
    /// Write plot data of one cell.
    Export {
        cell: String,
        #[arg(long, value_enum, default_value_t = ExportKind::DaytypeLikelihood)]
        kind: ExportKind,
        /// Destination file; defaults to the cell directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Fit the archetype model on a cell and assemble archetypes.
    Archetype {
        /// Defaults to the configured cell, then the best-scoring one.
        #[arg(long)]
        cell: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportKind {
    DaytypeLikelihood,
    Rdlps,
}

fn suite(cli: &Cli) -> Result<Suite> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Error::Config("--config <suite.toml> is required".into()))?;
    Suite::load(
        path,
        &Overrides {
            seed: cli.seed,
            top_k: cli.top_k,
            threads: cli.threads,
        },
    )
}

fn generate(cli: &Cli, preset: &str, households: Option<usize>) -> Result<()> {
    let spec = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            parse_generator(&text, path)?
        }
        None => preset_spec(preset, households)?,
    };
    let synth = synthesize_dataset(&spec, cli.seed.unwrap_or(0))?;
    let dir = &cli.out_dir;
    io::write_profiles(&dir.join("profiles.csv"), &synth.dataset)?;
    io::write_survey(&dir.join("survey.csv"), &synth.survey)?;
    io::write_truth(&dir.join("truth.csv"), &synth)?;
    println!(
        "{} profiles of {} households written to {}",
        synth.dataset.len(),
        synth.dataset.household_count(),
        dir.display()
    );
    Ok(())
}

fn run(cli: &Cli) -> Result<ExitCode> {
    let suite = suite(cli)?;
    let run = run_suite(&suite, &cli.out_dir)?;
    let m = &run.manifest;
    println!(
        "run {}: {} cells, {} failed, {} evaluated",
        m.run_id,
        m.cells.len(),
        m.failures(),
        m.cells.iter().filter(|c| c.evaluated).count()
    );
    for c in m.cells.iter().filter(|c| c.error.is_some()) {
        eprintln!("{}: {}", c.id, c.error.as_deref().unwrap_or_default());
    }
    match report::ScoreReport::read(&cli.out_dir) {
        Ok(r) if run.scorecard.is_some() => print!("\n{}", r.render()),
        _ => println!("fewer than two evaluated cells; no score card"),
    }
    Ok(if m.failures() > 0 {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}

fn score(cli: &Cli) -> Result<()> {
    let overrides = match &cli.config {
        Some(_) => {
            let e = suite(cli)?.config.evaluation;
            Some((e.weights(), e.rules()))
        }
        None => None,
    };
    let r = report::rescore(
        &cli.out_dir,
        overrides.as_ref().map(|o| &o.0),
        overrides.as_ref().map(|o| &o.1),
    )?;
    print!("{}", r.render());
    Ok(())
}

fn export(out_dir: &Path, cell: &str, kind: ExportKind, output: Option<&Path>) -> Result<()> {
    let path = match kind {
        ExportKind::DaytypeLikelihood => export::export_daytype_likelihood(out_dir, cell, output)?,
        ExportKind::Rdlps => export::export_rdlps(out_dir, cell, output)?,
    };
    println!("{}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Generate {
            preset,
            households_per_group,
        } => generate(&cli, preset, *households_per_group).map(|()| ExitCode::SUCCESS),
        Command::Run => run(&cli),
        Command::Score => score(&cli).map(|()| ExitCode::SUCCESS),
        Command::Export { cell, kind, output } => {
            export(&cli.out_dir, cell, *kind, output.as_deref()).map(|()| ExitCode::SUCCESS)
        }
        Command::Archetype { cell } => suite(&cli)
            .and_then(|s| archetype::run_archetypes(&s, &cli.out_dir, cell.as_deref()))
            .map(|r| {
                print!(
                    "{}",
                    fs::read_to_string(r.dir.join("archetypes.txt")).unwrap_or_default()
                );
                ExitCode::SUCCESS
            }),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 1 } else { 2 })
        }
    }
}
