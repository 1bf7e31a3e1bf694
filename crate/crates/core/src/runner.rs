//! Executes a validated experiment and writes its CSV files and manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::{EngineKind, Experiment, ExperimentConfig, ExperimentKind, Manifest};
use crate::error::{Error, Result};
use crate::identities::run_suite;
use crate::lab::{
    as_sweep_words, continuous_sweep_words, er_scan_with_track, l1_sweep_words, Engine,
    SweepOptions,
};
use crate::report::{format_real, track_csv, write_text, CsvReport};

pub const MANIFEST: &str = "manifest.toml";
pub const IDENTITY_CASES: usize = 1000;

#[derive(Clone, Debug, Default)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub files: Vec<PathBuf>,
    /// One human-readable line per emitted report.
    pub lines: Vec<String>,
    /// Identity checks with at least one failing case.
    pub failures: usize,
}

/// Output directory: `--out` wins, otherwise `output` relative to the config file.
pub fn resolve_output(
    config: &ExperimentConfig,
    config_path: &Path,
    over: Option<&Path>,
) -> PathBuf {
    if let Some(dir) = over {
        return dir.to_path_buf();
    }
    if config.output.is_absolute() {
        return config.output.clone();
    }
    config_path
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .join(&config.output)
}

pub fn validate_file(path: &Path) -> Result<Experiment> {
    ExperimentConfig::load(path)?.validate(path)
}

pub fn run(config_path: &Path, out: Option<&Path>) -> Result<RunSummary> {
    let experiment = validate_file(config_path)?;
    let dir = resolve_output(&experiment.config, config_path, out);
    run_experiment(&experiment, &dir).map_err(|source| match source {
        e @ (Error::Config { .. } | Error::Experiment { .. }) => e,
        other => Error::Experiment {
            path: config_path.to_path_buf(),
            source: Box::new(other),
        },
    })
}

/// Text outputs keyed by bare file name.
type Outputs = Vec<(String, String)>;

pub fn run_experiment(experiment: &Experiment, dir: &Path) -> Result<RunSummary> {
    let mut summary = RunSummary {
        output_dir: dir.to_path_buf(),
        ..RunSummary::default()
    };
    let outputs = compute(experiment, &mut summary)?;
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut names = Vec::with_capacity(outputs.len());
    for (name, text) in &outputs {
        let path = dir.join(name);
        write_text(&path, text)?;
        summary.files.push(path);
        names.push(name.clone());
    }
    let cfg = &experiment.config;
    let manifest = Manifest {
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        files: names,
        config: cfg.clone(),
    };
    let path = dir.join(MANIFEST);
    write_text(&path, &manifest.to_toml())?;
    summary.files.push(path);
    Ok(summary)
}

fn compute(experiment: &Experiment, summary: &mut RunSummary) -> Result<Outputs> {
    let cfg = &experiment.config;
    let opts = SweepOptions {
        depth: Some(experiment.depth),
        kahan: cfg.kahan,
    };
    let words = &experiment.words;
    let cps = &experiment.checkpoints;
    let kind = cfg.experiment;
    let reports = match kind {
        ExperimentKind::IdentitySuite => return identity_outputs(cfg.seed, summary),
        ExperimentKind::ErdosRenyi => return er_outputs(experiment, summary),
        ExperimentKind::AlmostSure => {
            as_sweep_words(model(experiment)?, words, cps, cfg.seed, &opts)?
        }
        ExperimentKind::Continuous => {
            let step = cfg.step.expect("validated");
            continuous_sweep_words(model(experiment)?, words, step, cps, cfg.seed, &opts)?
        }
        ExperimentKind::L1 => {
            let engine = match cfg.engine.unwrap_or_default() {
                EngineKind::Discrete => Engine::Discrete,
                EngineKind::Continuous => Engine::Continuous {
                    step: cfg.step.expect("validated"),
                },
            };
            let r = cfg.replications.expect("validated");
            l1_sweep_words(model(experiment)?, words, cps, r, cfg.seed, engine, &opts)?
        }
    };
    Ok(reports
        .iter()
        .map(|report| {
            let mut line = format!("{} word {}", kind.tag(), report.word);
            if let Some((n, err)) = report.final_error() {
                write!(line, ": n={n} error={err:.3e}").unwrap();
            }
            if let Some(slope) = report.slope {
                write!(line, " slope={slope:.3}").unwrap();
            }
            summary.lines.push(line);
            (
                format!("{}_w{}.csv", kind.tag(), report.word.tag()),
                report.to_csv(),
            )
        })
        .collect())
}

fn model(experiment: &Experiment) -> Result<&crate::processes::ProcessModel> {
    experiment
        .model
        .as_ref()
        .ok_or_else(|| Error::InvalidModel("experiment has no model".into()))
}

fn er_outputs(experiment: &Experiment, summary: &mut RunSummary) -> Result<Outputs> {
    let cfg = &experiment.config;
    let model = model(experiment)?;
    let jobs: Vec<(usize, usize)> = (0..experiment.words.len())
        .flat_map(|w| (0..cfg.alphas.len()).map(move |a| (w, a)))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(w, a)| {
            er_scan_with_track(
                model,
                &experiment.words[w],
                cfg.alphas[a],
                &experiment.checkpoints,
                cfg.seed,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for (&(w, a), (report, track)) in jobs.iter().zip(&results) {
        let tag = report.word.tag();
        if let Some((&n, &stat)) = report.checkpoints.last().zip(report.statistics.last()) {
            summary.lines.push(format!(
                "er word {} alpha {}: n={n} statistic={stat:.4} predicted={:.4}",
                report.word, report.alpha, report.predicted_limit
            ));
        }
        out.push((format!("er_w{tag}_a{}.csv", cfg.alphas[a]), report.to_csv()));
        if let (Some(every), 0) = (cfg.decimation, a) {
            out.push((
                format!("track_w{}.csv", experiment.words[w].tag()),
                track_csv(track, every),
            ));
        }
    }
    Ok(out)
}

fn identity_outputs(seed: u64, summary: &mut RunSummary) -> Result<Outputs> {
    let checks = run_suite(seed, IDENTITY_CASES)?;
    let mut csv = String::from("check,passed,total,worst_relative_error\n");
    for c in &checks {
        writeln!(
            csv,
            "{},{},{},{}",
            c.name,
            c.passed,
            c.total,
            format_real(c.worst)
        )
        .unwrap();
        summary.lines.push(format!(
            "{} {}: {}/{} (worst {:.2e})",
            if c.ok() { "PASS" } else { "FAIL" },
            c.name,
            c.passed,
            c.total,
            c.worst
        ));
        if !c.ok() {
            summary.failures += 1;
        }
    }
    Ok(vec![("identities.csv".into(), csv)])
}
