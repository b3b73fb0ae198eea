//! Named presets that expand to the reference parameter grids of the four
//! result plots (link quality, measurement count, convergence in steps, and
//! number of active transmitters).
//!
//! A preset pins the plot's scenario parameters and replaces the sweep;
//! the trial count, seed, and solver settings from the loaded config are
//! kept so desk-scale reruns stay cheap.

use specsense::metrics::SweepGrid;
use specsense::scenario::ScenarioConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    /// Detection vs SNR under poor (p = 0.3) and good (p = 0.8) connectivity.
    Fig2,
    /// Detection vs SNR for measurement counts T in {10, 20, 30, 40, 50}.
    Fig3,
    /// Convergence: detection vs step count K = 1..40 for p in {0.3, 0.8}
    /// and SNR in {5, 10} dB, at T = 40 measurements.
    Fig4,
    /// Detection vs SNR for P in {2, 4, 8, 16} active transmitters at p = 0.8.
    Fig5,
}

/// Apply a preset: pin its scenario parameters on `cfg` and return the sweep
/// grid it runs.
pub fn apply_preset(preset: Preset, cfg: &mut ScenarioConfig) -> SweepGrid {
    cfg.n_channels = 200;
    cfg.n_sus = 12;
    cfg.pathloss_exp = 2.0;
    cfg.area_side = 1000.0;
    cfg.min_su_spacing = 10.0;
    match preset {
        Preset::Fig2 => {
            cfg.n_pus = 4;
            cfg.n_measurements = 50;
            cfg.consensus_steps = 10;
            SweepGrid {
                link_prob: Some(vec![0.3, 0.8]),
                snr_db: Some(vec![-5.0, 0.0, 5.0, 10.0, 15.0, 20.0]),
                ..SweepGrid::default()
            }
        }
        Preset::Fig3 => {
            cfg.n_pus = 4;
            cfg.consensus_steps = 10;
            cfg.link_prob = 0.8;
            SweepGrid {
                n_measurements: Some(vec![10, 20, 30, 40, 50]),
                snr_db: Some(vec![0.0, 5.0, 10.0]),
                ..SweepGrid::default()
            }
        }
        Preset::Fig4 => {
            cfg.n_pus = 4;
            cfg.n_measurements = 40;
            SweepGrid {
                consensus_steps: Some((1..=40).collect()),
                link_prob: Some(vec![0.3, 0.8]),
                snr_db: Some(vec![5.0, 10.0]),
                ..SweepGrid::default()
            }
        }
        Preset::Fig5 => {
            cfg.n_measurements = 50;
            cfg.consensus_steps = 10;
            cfg.link_prob = 0.8;
            SweepGrid {
                n_pus: Some(vec![2, 4, 8, 16]),
                snr_db: Some(vec![0.0, 5.0, 10.0]),
                ..SweepGrid::default()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fig4_expands_to_160_cells() {
        let mut cfg = ScenarioConfig::default();
        let sweep = apply_preset(Preset::Fig4, &mut cfg);
        assert_eq!(cfg.n_measurements, 40);
        assert_eq!(sweep.n_cells(), 160);
        let cells = sweep.expand(&cfg);
        assert_eq!(cells.len(), 160);
        assert!(cells.iter().all(|c| c.n_measurements == 40));
        assert_eq!(cells[0].consensus_steps, 1);
        assert_eq!(cells.last().unwrap().consensus_steps, 40);
    }

    #[test]
    fn presets_keep_trials_and_seed() {
        let mut cfg = ScenarioConfig {
            trials: 7,
            rng_seed: 99,
            ..ScenarioConfig::default()
        };
        let _ = apply_preset(Preset::Fig2, &mut cfg);
        assert_eq!(cfg.trials, 7);
        assert_eq!(cfg.rng_seed, 99);
    }

    #[test]
    fn preset_grids_match_their_captions() {
        let mut cfg = ScenarioConfig::default();
        let sweep = apply_preset(Preset::Fig2, &mut cfg);
        assert_eq!(cfg.n_measurements, 50);
        assert_eq!(sweep.link_prob, Some(vec![0.3, 0.8]));

        let sweep = apply_preset(Preset::Fig3, &mut cfg);
        assert_eq!(sweep.n_measurements, Some(vec![10, 20, 30, 40, 50]));

        let sweep = apply_preset(Preset::Fig5, &mut cfg);
        assert_eq!(sweep.n_pus, Some(vec![2, 4, 8, 16]));
        assert_eq!(cfg.link_prob, 0.8);
    }
}
