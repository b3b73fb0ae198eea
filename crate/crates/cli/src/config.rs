//! TOML experiment configuration.
//!
//! Every scenario field is optional and falls back to the default grid
//! (N = 200 channels, T = 50 measurements, P = 4 active transmitters,
//! M = 12 SUs, alpha = 2, K = 10 steps, 500 trials). Unknown keys are
//! rejected. The `[solver]` table tunes the l1 solver and `[sweep]` lists
//! the swept axes.

use serde::Deserialize;
use thiserror::Error;

use specsense::metrics::SweepGrid;
use specsense::scenario::ScenarioConfig;
use specsense::sensing::SolverOptions;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config validation error: {0}")]
    Invalid(#[from] specsense::Error),
    #[error("invalid {name}: {reason}")]
    BadValue { name: String, reason: String },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ConfigDoc {
    n_channels: Option<usize>,
    n_sus: Option<usize>,
    n_pus: Option<usize>,
    n_measurements: Option<usize>,
    consensus_steps: Option<usize>,
    link_prob: Option<f64>,
    pathloss_exp: Option<f64>,
    snr_db: Option<f64>,
    threshold: Option<f64>,
    area_side: Option<f64>,
    min_su_spacing: Option<f64>,
    trials: Option<usize>,
    rng_seed: Option<u64>,
    solver: Option<SolverOptions>,
    sweep: Option<SweepGrid>,
}

/// Parse a config document, fill omitted fields with the defaults, and
/// validate the result. An empty document yields the full default setup.
pub fn parse_config(text: &str) -> Result<(ScenarioConfig, SolverOptions, SweepGrid), ConfigError> {
    let doc: ConfigDoc = toml::from_str(text)?;
    let mut cfg = ScenarioConfig::default();
    if let Some(v) = doc.n_channels {
        cfg.n_channels = v;
    }
    if let Some(v) = doc.n_sus {
        cfg.n_sus = v;
    }
    if let Some(v) = doc.n_pus {
        cfg.n_pus = v;
    }
    if let Some(v) = doc.n_measurements {
        cfg.n_measurements = v;
    }
    if let Some(v) = doc.consensus_steps {
        cfg.consensus_steps = v;
    }
    if let Some(v) = doc.link_prob {
        cfg.link_prob = v;
    }
    if let Some(v) = doc.pathloss_exp {
        cfg.pathloss_exp = v;
    }
    if let Some(v) = doc.snr_db {
        cfg.snr_db = v;
    }
    if doc.threshold.is_some() {
        cfg.threshold = doc.threshold;
    }
    if let Some(v) = doc.area_side {
        cfg.area_side = v;
    }
    if let Some(v) = doc.min_su_spacing {
        cfg.min_su_spacing = v;
    }
    if let Some(v) = doc.trials {
        cfg.trials = v;
    }
    if let Some(v) = doc.rng_seed {
        cfg.rng_seed = v;
    }
    let solver = doc.solver.unwrap_or_default();
    let sweep = doc.sweep.unwrap_or_default();
    cfg.validate()?;
    solver.validate()?;
    sweep.validate()?;
    Ok((cfg, solver, sweep))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_yields_the_default_grid() {
        let (cfg, solver, sweep) = parse_config("").unwrap();
        assert_eq!(cfg.n_channels, 200);
        assert_eq!(cfg.n_measurements, 50);
        assert_eq!(cfg.n_pus, 4);
        assert_eq!(cfg.n_sus, 12);
        assert_eq!(cfg.pathloss_exp, 2.0);
        assert_eq!(cfg.consensus_steps, 10);
        assert_eq!(cfg.trials, 500);
        assert_eq!(solver, SolverOptions::default());
        assert_eq!(sweep, SweepGrid::default());
    }

    #[test]
    fn invariant_violations_are_config_errors() {
        let err = parse_config("n_pus = 300\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("n_pus"), "{msg}");
    }

    #[test]
    fn sweep_axes_expand() {
        let (cfg, _, sweep) = parse_config("[sweep]\nlink_prob = [0.3, 0.8]\n").unwrap();
        assert_eq!(sweep.n_cells(), 2);
        let cells = sweep.expand(&cfg);
        assert_eq!(cells.len(), 2);
        assert_eq!(cells[0].link_prob, 0.3);
        assert_eq!(cells[1].link_prob, 0.8);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse_config("frobnicate = 3\n").is_err());
        assert!(parse_config("[sweep]\nbogus_axis = [1]\n").is_err());
        assert!(parse_config("[solver]\nturbo = true\n").is_err());
    }

    #[test]
    fn solver_table_overrides() {
        let (_, solver, _) =
            parse_config("[solver]\nmax_iters = 100\naccelerated = false\n").unwrap();
        assert_eq!(solver.max_iters, 100);
        assert!(!solver.accelerated);
        assert_eq!(solver.tol, SolverOptions::default().tol);
    }

    #[test]
    fn threshold_stays_derived_when_omitted() {
        let (cfg, _, _) = parse_config("snr_db = 5.0\n").unwrap();
        assert_eq!(cfg.threshold, None);
        let (cfg, _, _) = parse_config("threshold = 0.01\n").unwrap();
        assert_eq!(cfg.threshold, Some(0.01));
    }
}
