//! Execute one experiment manifest and write its artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use specsense::metrics::{self, MetricsReport, SweepGrid};
use specsense::scenario::ScenarioConfig;
use specsense::sensing::SolverOptions;

use crate::config::{parse_config, ConfigError};
use crate::presets::{apply_preset, Preset};
use crate::SEED_ENV_VAR;

/// What `run` writes into the output directory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Emit {
    /// `results.csv`: one row per sweep cell.
    Csv,
    /// `results.json`: full report with config digest and per-step traces.
    Json,
    /// `trace.csv`: per-step detection / false-alarm rows for every cell.
    Trace,
}

#[derive(Debug, Clone)]
pub struct RunManifest {
    /// Config document to load; `None` runs the default setup.
    pub config_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub preset: Option<Preset>,
    /// Seed override from the command line (stronger than the environment,
    /// which is stronger than the config file).
    pub master_seed: Option<u64>,
    pub emit: Vec<Emit>,
    pub threads: Option<usize>,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("simulation failed: {0}")]
    Pipeline(#[from] specsense::Error),
    #[error("i/o failure at {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug)]
pub struct RunSummary {
    pub report: MetricsReport,
    pub written: Vec<PathBuf>,
}

impl RunSummary {
    /// Plain-text per-cell summary table.
    pub fn table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:>5} {:>4} {:>5} {:>3} {:>6} {:>8} {:>8} {:>8} {:>8} {:>7}\n",
            "cell", "k", "p", "T", "snr", "pd", "pfa", "pd_fus", "pfa_fus", "pi11"
        ));
        for (idx, c) in self.report.cells.iter().enumerate() {
            out.push_str(&format!(
                "c{:04} {:>4} {:>5} {:>3} {:>6} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>7.4}\n",
                idx,
                c.k,
                c.p,
                c.t_measurements,
                c.snr_db,
                c.pd_empirical,
                c.pfa_empirical,
                c.pd_fusion,
                c.pfa_fusion,
                c.pi11_hat
            ));
        }
        out
    }
}

fn read_config(manifest: &RunManifest) -> Result<(ScenarioConfig, SolverOptions, SweepGrid), RunError> {
    let text = match &manifest.config_path {
        Some(path) => fs::read_to_string(path).map_err(|source| RunError::Io {
            path: path.clone(),
            source,
        })?,
        None => String::new(),
    };
    Ok(parse_config(&text)?)
}

fn resolve_seed(manifest: &RunManifest, from_config: u64) -> Result<u64, RunError> {
    if let Some(seed) = manifest.master_seed {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV_VAR) {
        Ok(raw) => raw.parse::<u64>().map_err(|_| {
            RunError::Config(ConfigError::BadValue {
                name: SEED_ENV_VAR.to_string(),
                reason: format!("expected a u64, got {raw:?}"),
            })
        }),
        Err(_) => Ok(from_config),
    }
}

fn write_artifact(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, RunError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| RunError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Load, execute, and emit one experiment run.
pub fn run(manifest: &RunManifest) -> Result<RunSummary, RunError> {
    if manifest.emit.is_empty() {
        return Err(RunError::Config(ConfigError::BadValue {
            name: "emit".into(),
            reason: "at least one artifact kind is required".into(),
        }));
    }
    let (mut cfg, solver, mut sweep) = read_config(manifest)?;
    if let Some(preset) = manifest.preset {
        sweep = apply_preset(preset, &mut cfg);
        cfg.validate().map_err(ConfigError::Invalid)?;
    }
    cfg.rng_seed = resolve_seed(manifest, cfg.rng_seed)?;

    let report = match manifest.threads {
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .expect("thread pool");
            pool.install(|| metrics::run_experiment::<f64>(&cfg, &sweep, &solver))?
        }
        None => metrics::run_experiment::<f64>(&cfg, &sweep, &solver)?,
    };

    fs::create_dir_all(&manifest.output_dir).map_err(|source| RunError::Io {
        path: manifest.output_dir.clone(),
        source,
    })?;
    let mut written = Vec::new();
    if manifest.emit.contains(&Emit::Csv) {
        written.push(write_artifact(
            &manifest.output_dir,
            "results.csv",
            &metrics::to_csv(&report),
        )?);
    }
    if manifest.emit.contains(&Emit::Json) {
        written.push(write_artifact(
            &manifest.output_dir,
            "results.json",
            &metrics::to_json(&report),
        )?);
    }
    if manifest.emit.contains(&Emit::Trace) {
        written.push(write_artifact(
            &manifest.output_dir,
            "trace.csv",
            &metrics::to_trace_csv(&report),
        )?);
    }
    Ok(RunSummary { report, written })
}
