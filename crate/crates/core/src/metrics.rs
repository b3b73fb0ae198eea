//! Monte Carlo orchestration and empirical performance metrics.
//!
//! [`run_experiment`] expands a sweep grid into cells, runs the full
//! scenario -> sensing -> consensus pipeline (plus the paired fusion
//! baseline) for every cell, and aggregates pooled detection / false-alarm
//! ratios together with the closed-form overlays from the theory module.
//!
//! Sensing results are deterministic functions of the sensing-relevant
//! parameters and the trial streams, so cells that differ only in the
//! consensus axes (step count, link probability) share one sensing pass.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::consensus::{
    fusion_majority, run_diversity_consensus_trace, DecisionMatrix,
};
use crate::error::{Error, Result};
use crate::real::Real;
use crate::rng::substream;
use crate::scenario::{Occupancy, Scenario, ScenarioConfig};
use crate::sensing::{
    default_threshold, draw_measurement_matrix, measure, noise_var_from_snr, recover_l1,
    threshold_decide, SolverOptions,
};
use crate::theory::{estimate_pi11, pd_asymptotic, pd_finite_k, TheoryParams};

/// Everything recorded for one trial of one cell.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub occupancy: Occupancy,
    pub initial_votes: DecisionMatrix,
    /// Consensus decisions after each step `1..=K`.
    pub consensus_votes_by_step: Vec<DecisionMatrix>,
    /// Majority-rule fusion of the same initial votes.
    pub fusion_decision: Vec<u8>,
}

impl TrialOutcome {
    fn votes_at(&self, k: usize) -> &DecisionMatrix {
        assert!(
            k <= self.consensus_votes_by_step.len(),
            "step {k} beyond the {} recorded",
            self.consensus_votes_by_step.len()
        );
        if k == 0 {
            &self.initial_votes
        } else {
            &self.consensus_votes_by_step[k - 1]
        }
    }
}

/// Pooled detection probability at step `k` (`k = 0` reads the initial
/// votes): the fraction of (occupied channel, SU) pairs voting 1.
pub fn pd_empirical(outcomes: &[TrialOutcome], k: usize) -> Result<f64> {
    let mut pairs = 0u64;
    let mut flagged = 0u64;
    for outcome in outcomes {
        let votes = outcome.votes_at(k);
        for j in outcome.occupancy.active_channels() {
            for i in 0..votes.n_sus() {
                pairs += 1;
                flagged += u64::from(votes.get(j, i));
            }
        }
    }
    if pairs == 0 {
        return Err(Error::NoActiveChannels);
    }
    Ok(flagged as f64 / pairs as f64)
}

/// Pooled false-alarm probability at step `k`: the fraction of (unoccupied
/// channel, SU) pairs voting 1.
pub fn pfa_empirical(outcomes: &[TrialOutcome], k: usize) -> Result<f64> {
    let mut pairs = 0u64;
    let mut flagged = 0u64;
    for outcome in outcomes {
        let votes = outcome.votes_at(k);
        for j in 0..outcome.occupancy.len() {
            if outcome.occupancy.is_active(j) {
                continue;
            }
            for i in 0..votes.n_sus() {
                pairs += 1;
                flagged += u64::from(votes.get(j, i));
            }
        }
    }
    if pairs == 0 {
        return Err(Error::NoInactiveChannels);
    }
    Ok(flagged as f64 / pairs as f64)
}

/// Detection probability of the majority-rule fusion baseline, pooled over
/// occupied channels.
pub fn pd_fusion(outcomes: &[TrialOutcome]) -> Result<f64> {
    let mut channels = 0u64;
    let mut detected = 0u64;
    for outcome in outcomes {
        for j in outcome.occupancy.active_channels() {
            channels += 1;
            detected += u64::from(outcome.fusion_decision[j]);
        }
    }
    if channels == 0 {
        return Err(Error::NoActiveChannels);
    }
    Ok(detected as f64 / channels as f64)
}

/// False-alarm probability of the fusion baseline, pooled over unoccupied
/// channels.
pub fn pfa_fusion(outcomes: &[TrialOutcome]) -> Result<f64> {
    let mut channels = 0u64;
    let mut flagged = 0u64;
    for outcome in outcomes {
        for j in 0..outcome.occupancy.len() {
            if outcome.occupancy.is_active(j) {
                continue;
            }
            channels += 1;
            flagged += u64::from(outcome.fusion_decision[j]);
        }
    }
    if channels == 0 {
        return Err(Error::NoInactiveChannels);
    }
    Ok(flagged as f64 / channels as f64)
}

/// Parameter grid of an experiment: each populated axis sweeps one
/// [`ScenarioConfig`] field; the cells are the cartesian product, expanded
/// with the step-count axis outermost and the SU-count axis innermost.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepGrid {
    pub consensus_steps: Option<Vec<usize>>,
    pub link_prob: Option<Vec<f64>>,
    pub n_measurements: Option<Vec<usize>>,
    pub snr_db: Option<Vec<f64>>,
    pub n_pus: Option<Vec<usize>>,
    pub threshold: Option<Vec<f64>>,
    pub n_sus: Option<Vec<usize>>,
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        fn check<T>(axis: &Option<Vec<T>>, field: &'static str) -> Result<()> {
            match axis {
                Some(values) if values.is_empty() => {
                    Err(Error::invalid(field, "sweep axis must not be empty"))
                }
                _ => Ok(()),
            }
        }
        check(&self.consensus_steps, "sweep.consensus_steps")?;
        check(&self.link_prob, "sweep.link_prob")?;
        check(&self.n_measurements, "sweep.n_measurements")?;
        check(&self.snr_db, "sweep.snr_db")?;
        check(&self.n_pus, "sweep.n_pus")?;
        check(&self.threshold, "sweep.threshold")?;
        check(&self.n_sus, "sweep.n_sus")?;
        Ok(())
    }

    pub fn n_cells(&self) -> usize {
        fn len<T>(axis: &Option<Vec<T>>) -> usize {
            axis.as_ref().map_or(1, Vec::len)
        }
        len(&self.consensus_steps)
            * len(&self.link_prob)
            * len(&self.n_measurements)
            * len(&self.snr_db)
            * len(&self.n_pus)
            * len(&self.threshold)
            * len(&self.n_sus)
    }

    /// Cartesian expansion over the base configuration.
    pub fn expand(&self, base: &ScenarioConfig) -> Vec<ScenarioConfig> {
        let ks = self
            .consensus_steps
            .clone()
            .unwrap_or_else(|| vec![base.consensus_steps]);
        let ps = self.link_prob.clone().unwrap_or_else(|| vec![base.link_prob]);
        let ts = self
            .n_measurements
            .clone()
            .unwrap_or_else(|| vec![base.n_measurements]);
        let snrs = self.snr_db.clone().unwrap_or_else(|| vec![base.snr_db]);
        let pus = self.n_pus.clone().unwrap_or_else(|| vec![base.n_pus]);
        let etas: Vec<Option<f64>> = match &self.threshold {
            Some(values) => values.iter().copied().map(Some).collect(),
            None => vec![base.threshold],
        };
        let ms = self.n_sus.clone().unwrap_or_else(|| vec![base.n_sus]);

        let mut cells = Vec::with_capacity(self.n_cells());
        for &k in &ks {
            for &p in &ps {
                for &t in &ts {
                    for &snr in &snrs {
                        for &pu in &pus {
                            for &eta in &etas {
                                for &m in &ms {
                                    let mut cfg = base.clone();
                                    cfg.consensus_steps = k;
                                    cfg.link_prob = p;
                                    cfg.n_measurements = t;
                                    cfg.snr_db = snr;
                                    cfg.n_pus = pu;
                                    cfg.threshold = eta;
                                    cfg.n_sus = m;
                                    cells.push(cfg);
                                }
                            }
                        }
                    }
                }
            }
        }
        cells
    }
}

/// One row of the results table; the CSV columns are exactly these fields in
/// this order.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CellRecord {
    pub k: usize,
    pub p: f64,
    pub t_measurements: usize,
    pub snr_db: f64,
    pub pd_empirical: f64,
    pub pfa_empirical: f64,
    pub pd_fusion: f64,
    pub pfa_fusion: f64,
    pub pd_theory_finite: f64,
    pub pd_theory_asymptotic: f64,
    pub pi11_hat: f64,
    pub trials: usize,
    pub seed: u64,
}

/// Per-step detection / false-alarm trace of one cell (step 0 = initial votes).
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct StepMetrics {
    pub k: usize,
    pub pd: f64,
    pub pfa: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CellTrace {
    pub cell: usize,
    pub steps: Vec<StepMetrics>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ReportMetadata {
    /// SHA-256 over the canonical JSON of (base config, solver, sweep).
    pub config_digest: String,
    pub version: String,
    pub master_seed: u64,
}

/// Full experiment output: one record per cell plus per-step traces and
/// enough metadata to reproduce the run.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MetricsReport {
    pub metadata: ReportMetadata,
    pub base_config: ScenarioConfig,
    pub solver: SolverOptions,
    pub sweep: SweepGrid,
    /// Effective configuration of every cell, in record order.
    pub cell_configs: Vec<ScenarioConfig>,
    pub cells: Vec<CellRecord>,
    pub traces: Vec<CellTrace>,
}

/// Sensing output of one trial, reused across consensus-axis cells.
#[derive(Debug, Clone)]
struct SensingTrial {
    occupancy: Occupancy,
    initial_votes: DecisionMatrix,
}

#[derive(Debug)]
struct SensingSet {
    trials: Vec<Option<SensingTrial>>,
    failures: usize,
    first_error: Option<String>,
}

/// The parameters the sensing stage depends on; cells sharing a key share
/// one sensing pass (the consensus axes K and p are deliberately absent).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct SensingKey {
    n_channels: usize,
    n_sus: usize,
    n_pus: usize,
    n_measurements: usize,
    snr_bits: u64,
    threshold_bits: Option<u64>,
    pathloss_bits: u64,
    area_bits: u64,
    spacing_bits: u64,
    trials: usize,
}

impl SensingKey {
    fn of(cfg: &ScenarioConfig) -> Self {
        SensingKey {
            n_channels: cfg.n_channels,
            n_sus: cfg.n_sus,
            n_pus: cfg.n_pus,
            n_measurements: cfg.n_measurements,
            snr_bits: cfg.snr_db.to_bits(),
            threshold_bits: cfg.threshold.map(f64::to_bits),
            pathloss_bits: cfg.pathloss_exp.to_bits(),
            area_bits: cfg.area_side.to_bits(),
            spacing_bits: cfg.min_su_spacing.to_bits(),
            trials: cfg.trials,
        }
    }
}

/// Scenario generation, measurement, recovery, and local thresholding for
/// one trial.
fn sense_one_trial<R: Real>(
    cfg: &ScenarioConfig,
    master: u64,
    trial: u64,
    solver: &SolverOptions,
) -> Result<SensingTrial> {
    let scenario: Scenario<R> = Scenario::generate(cfg, master, trial)?;
    let noise_var = noise_var_from_snr(&scenario.gains, &scenario.occupancy, R::of(cfg.snr_db));
    let eta = match cfg.threshold {
        Some(eta) => R::of(eta),
        None => default_threshold(
            &scenario.pu_positions,
            &scenario.su_positions,
            R::of(cfg.pathloss_exp),
        ),
    };

    let mut measurement_rng = substream(master, "measurement", trial);
    let matrices: Vec<_> = (0..cfg.n_sus)
        .map(|_| {
            draw_measurement_matrix::<R, _>(cfg.n_measurements, cfg.n_channels, &mut measurement_rng)
        })
        .collect();
    let mut noise_rng = substream(master, "noise", trial);
    let measurements = measure(matrices, &scenario.signals, noise_var, &mut noise_rng)?;

    let votes: Vec<_> = (0..cfg.n_sus)
        .map(|su| {
            let y = measurements.observations.column(su).to_owned();
            let recovered = recover_l1(&measurements.matrices[su], &y, noise_var, solver)?;
            Ok(threshold_decide(&recovered.xhat, eta))
        })
        .collect::<Result<_>>()?;

    Ok(SensingTrial {
        occupancy: scenario.occupancy,
        initial_votes: DecisionMatrix::from_local_votes(&votes)?,
    })
}

fn run_sensing_stage<R: Real>(
    cfg: &ScenarioConfig,
    master: u64,
    solver: &SolverOptions,
) -> SensingSet {
    let results: Vec<Result<SensingTrial>> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| sense_one_trial::<R>(cfg, master, trial as u64, solver))
        .collect();
    let mut trials = Vec::with_capacity(results.len());
    let mut failures = 0;
    let mut first_error = None;
    for result in results {
        match result {
            Ok(trial) => trials.push(Some(trial)),
            Err(err) => {
                failures += 1;
                if first_error.is_none() {
                    first_error = Some(err.to_string());
                }
                trials.push(None);
            }
        }
    }
    SensingSet {
        trials,
        failures,
        first_error,
    }
}

fn config_digest(base: &ScenarioConfig, solver: &SolverOptions, sweep: &SweepGrid) -> String {
    #[derive(serde::Serialize)]
    struct DigestInput<'a> {
        base: &'a ScenarioConfig,
        solver: &'a SolverOptions,
        sweep: &'a SweepGrid,
    }
    let canonical = serde_json::to_string(&DigestInput { base, solver, sweep })
        .expect("config serializes");
    let hash = Sha256::digest(canonical.as_bytes());
    hash.iter().map(|b| format!("{b:02x}")).collect()
}

/// Run the full experiment: every sweep cell, `cfg.trials` end-to-end trials
/// per cell, paired fusion baseline, and theory overlays fed by the per-cell
/// detection-rate estimate. Deterministic for a fixed configuration.
pub fn run_experiment<R: Real>(
    base: &ScenarioConfig,
    sweep: &SweepGrid,
    solver: &SolverOptions,
) -> Result<MetricsReport> {
    base.validate()?;
    sweep.validate()?;
    let master = base.rng_seed;
    let cell_configs = sweep.expand(base);

    let mut sensing_cache: HashMap<SensingKey, Arc<SensingSet>> = HashMap::new();
    let mut cells = Vec::with_capacity(cell_configs.len());
    let mut traces = Vec::with_capacity(cell_configs.len());

    for (cell_idx, cfg) in cell_configs.iter().enumerate() {
        cfg.validate()?;
        let sensing = sensing_cache
            .entry(SensingKey::of(cfg))
            .or_insert_with(|| Arc::new(run_sensing_stage::<R>(cfg, master, solver)))
            .clone();

        if sensing.failures * 10 > cfg.trials {
            return Err(Error::CellDegenerate {
                cell_id: format!("c{cell_idx:04}"),
                failed: sensing.failures,
                total: cfg.trials,
                first: sensing
                    .first_error
                    .clone()
                    .unwrap_or_else(|| "unknown".into()),
            });
        }

        let k_final = cfg.consensus_steps;
        let p = cfg.link_prob;
        let outcomes: Vec<TrialOutcome> = sensing
            .trials
            .par_iter()
            .enumerate()
            .map(|(trial, slot)| {
                slot.as_ref().map(|st| {
                    let mut links_rng = substream(master, "links", trial as u64);
                    let by_step = run_diversity_consensus_trace(
                        &st.initial_votes,
                        k_final,
                        R::of(p),
                        &mut links_rng,
                    );
                    TrialOutcome {
                        occupancy: st.occupancy.clone(),
                        initial_votes: st.initial_votes.clone(),
                        consensus_votes_by_step: by_step,
                        fusion_decision: fusion_majority(&st.initial_votes),
                    }
                })
            })
            .collect::<Vec<Option<TrialOutcome>>>()
            .into_iter()
            .flatten()
            .collect();

        let pi11_hat = estimate_pi11(outcomes.iter().flat_map(|o| {
            let votes = &o.initial_votes;
            let occ = &o.occupancy;
            (0..occ.len()).flat_map(move |j| {
                (0..votes.n_sus()).map(move |i| (votes.get(j, i) == 1, occ.is_active(j)))
            })
        }))?;

        let steps: Vec<StepMetrics> = (0..=k_final)
            .map(|k| {
                Ok(StepMetrics {
                    k,
                    pd: pd_empirical(&outcomes, k)?,
                    pfa: pfa_empirical(&outcomes, k)?,
                })
            })
            .collect::<Result<_>>()?;

        cells.push(CellRecord {
            k: k_final,
            p,
            t_measurements: cfg.n_measurements,
            snr_db: cfg.snr_db,
            pd_empirical: steps[k_final].pd,
            pfa_empirical: steps[k_final].pfa,
            pd_fusion: pd_fusion(&outcomes)?,
            pfa_fusion: pfa_fusion(&outcomes)?,
            pd_theory_finite: pd_finite_k(&TheoryParams {
                m: cfg.n_sus,
                k: k_final,
                p,
                pi11: pi11_hat,
            }),
            pd_theory_asymptotic: pd_asymptotic(cfg.n_sus, pi11_hat),
            pi11_hat,
            trials: outcomes.len(),
            seed: master,
        });
        traces.push(CellTrace {
            cell: cell_idx,
            steps,
        });
    }

    Ok(MetricsReport {
        metadata: ReportMetadata {
            config_digest: config_digest(base, solver, sweep),
            version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed: master,
        },
        base_config: base.clone(),
        solver: *solver,
        sweep: sweep.clone(),
        cell_configs,
        cells,
        traces,
    })
}

/// Results table as UTF-8 CSV with a header row; columns match
/// [`CellRecord`]'s field order.
pub fn to_csv(report: &MetricsReport) -> String {
    let mut out = String::from(
        "k,p,t_measurements,snr_db,pd_empirical,pfa_empirical,pd_fusion,pfa_fusion,\
         pd_theory_finite,pd_theory_asymptotic,pi11_hat,trials,seed\n",
    );
    for c in &report.cells {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            c.k,
            c.p,
            c.t_measurements,
            c.snr_db,
            c.pd_empirical,
            c.pfa_empirical,
            c.pd_fusion,
            c.pfa_fusion,
            c.pd_theory_finite,
            c.pd_theory_asymptotic,
            c.pi11_hat,
            c.trials,
            c.seed
        ));
    }
    out
}

/// Per-step traces as CSV: one row per (cell, step).
pub fn to_trace_csv(report: &MetricsReport) -> String {
    let mut out = String::from("cell_id,k,pd,pfa\n");
    for trace in &report.traces {
        for step in &trace.steps {
            out.push_str(&format!(
                "c{:04},{},{},{}\n",
                trace.cell, step.k, step.pd, step.pfa
            ));
        }
    }
    out
}

/// Full report as pretty-printed JSON.
pub fn to_json(report: &MetricsReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use proptest::prelude::*;

    fn outcome_from_votes(occ: Vec<u8>, votes: Array2<u8>) -> TrialOutcome {
        let initial = DecisionMatrix::from_array(votes).unwrap();
        let fusion = fusion_majority(&initial);
        TrialOutcome {
            occupancy: Occupancy::from_diag(occ).unwrap(),
            initial_votes: initial.clone(),
            consensus_votes_by_step: vec![initial],
            fusion_decision: fusion,
        }
    }

    fn small_config() -> ScenarioConfig {
        ScenarioConfig {
            n_channels: 24,
            n_sus: 5,
            n_pus: 2,
            n_measurements: 12,
            consensus_steps: 3,
            link_prob: 0.8,
            snr_db: 15.0,
            trials: 8,
            rng_seed: 42,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn pd_counts_active_pairs() {
        // M=2, P=2: votes on the two active channels are (1,1) and (1,0).
        let outcome = outcome_from_votes(vec![1, 1, 0], array![[1, 1], [1, 0], [0, 0]]);
        assert_eq!(pd_empirical(&[outcome], 0).unwrap(), 0.75);
    }

    #[test]
    fn pd_trivial_extremes() {
        let correct = outcome_from_votes(vec![1, 0], array![[1, 1], [0, 0]]);
        assert_eq!(pd_empirical(&[correct], 0).unwrap(), 1.0);
        let silent = outcome_from_votes(vec![1, 0], array![[0, 0], [0, 0]]);
        assert_eq!(pd_empirical(&[silent], 0).unwrap(), 0.0);
    }

    #[test]
    fn pfa_counts_inactive_pairs() {
        // M=2, N=3, P=1: one flag among the four inactive pairs.
        let outcome = outcome_from_votes(vec![1, 0, 0], array![[1, 1], [1, 0], [0, 0]]);
        assert_eq!(pfa_empirical(&[outcome], 0).unwrap(), 0.25);
        let clean = outcome_from_votes(vec![1, 0, 0], array![[1, 1], [0, 0], [0, 0]]);
        assert_eq!(pfa_empirical(&[clean], 0).unwrap(), 0.0);
        let noisy = outcome_from_votes(vec![1, 0, 0], array![[0, 0], [1, 1], [1, 1]]);
        assert_eq!(pfa_empirical(&[noisy], 0).unwrap(), 1.0);
    }

    #[test]
    fn degenerate_occupancies_error() {
        let all_active = outcome_from_votes(vec![1, 1], array![[1, 1], [1, 1]]);
        assert!(matches!(
            pfa_empirical(&[all_active.clone()], 0),
            Err(Error::NoInactiveChannels)
        ));
        assert!(matches!(
            pfa_fusion(&[all_active]),
            Err(Error::NoInactiveChannels)
        ));
        let none_active = outcome_from_votes(vec![0, 0], array![[1, 1], [1, 1]]);
        assert!(matches!(
            pd_empirical(&[none_active.clone()], 0),
            Err(Error::NoActiveChannels)
        ));
        assert!(matches!(
            pd_fusion(&[none_active]),
            Err(Error::NoActiveChannels)
        ));
    }

    #[test]
    fn fusion_metrics_boundary_behavior() {
        // 6 of 12 votes on an active channel counts as detected.
        let mut votes = Array2::zeros((1, 12));
        for i in 0..6 {
            votes[(0, i)] = 1;
        }
        let outcome = outcome_from_votes(vec![1], votes);
        assert_eq!(pd_fusion(&[outcome]).unwrap(), 1.0);
        // (1,1,0) on an inactive channel is a false alarm (2 >= 1.5).
        let outcome = outcome_from_votes(vec![0, 1], array![[1, 1, 0], [1, 1, 1]]);
        assert_eq!(pfa_fusion(&[outcome]).unwrap(), 1.0);
        // Unanimous correct votes.
        let outcome = outcome_from_votes(vec![1, 0], array![[1, 1, 1], [0, 0, 0]]);
        assert_eq!(pd_fusion(&[outcome.clone()]).unwrap(), 1.0);
        assert_eq!(pfa_fusion(&[outcome]).unwrap(), 0.0);
    }

    #[test]
    fn sweep_expansion_shapes() {
        let base = small_config();
        let grid = SweepGrid {
            consensus_steps: Some((1..=10).collect()),
            ..SweepGrid::default()
        };
        let cells = grid.expand(&base);
        assert_eq!(cells.len(), 10);
        assert!(cells.iter().enumerate().all(|(i, c)| c.consensus_steps == i + 1));

        let grid = SweepGrid {
            link_prob: Some(vec![0.3, 0.8]),
            snr_db: Some(vec![5.0, 10.0]),
            ..SweepGrid::default()
        };
        assert_eq!(grid.n_cells(), 4);
        let cells = grid.expand(&base);
        // p is outer relative to snr.
        assert_eq!(cells[0].link_prob, 0.3);
        assert_eq!(cells[0].snr_db, 5.0);
        assert_eq!(cells[1].snr_db, 10.0);
        assert_eq!(cells[2].link_prob, 0.8);
    }

    #[test]
    fn empty_axis_rejected() {
        let grid = SweepGrid {
            link_prob: Some(vec![]),
            ..SweepGrid::default()
        };
        assert!(grid.validate().is_err());
    }

    #[test]
    fn default_sweep_is_single_cell() {
        let grid = SweepGrid::default();
        assert_eq!(grid.n_cells(), 1);
        let cells = grid.expand(&small_config());
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0], small_config());
    }

    #[test]
    fn experiment_single_cell_smoke() {
        let cfg = small_config();
        let report = run_experiment::<f64>(&cfg, &SweepGrid::default(), &SolverOptions::default())
            .unwrap();
        assert_eq!(report.cells.len(), 1);
        let cell = &report.cells[0];
        assert_eq!(cell.trials, 8);
        assert_eq!(cell.k, 3);
        for prob in [
            cell.pd_empirical,
            cell.pfa_empirical,
            cell.pd_fusion,
            cell.pfa_fusion,
            cell.pd_theory_finite,
            cell.pd_theory_asymptotic,
            cell.pi11_hat,
        ] {
            assert!((0.0..=1.0).contains(&prob), "{cell:?}");
        }
        assert_eq!(report.traces[0].steps.len(), 4);
        // At a friendly SNR the pipeline should detect most of the time.
        assert!(cell.pi11_hat > 0.5, "pi11 {}", cell.pi11_hat);
        assert!(cell.pfa_empirical < 0.5);
    }

    #[test]
    fn full_connectivity_consensus_matches_fusion_in_reports() {
        let mut cfg = small_config();
        cfg.link_prob = 1.0;
        cfg.consensus_steps = 4;
        let report = run_experiment::<f64>(&cfg, &SweepGrid::default(), &SolverOptions::default())
            .unwrap();
        let cell = &report.cells[0];
        assert_eq!(cell.pd_empirical, cell.pd_fusion);
        assert_eq!(cell.pfa_empirical, cell.pfa_fusion);
    }

    #[test]
    fn reports_are_deterministic() {
        let cfg = small_config();
        let grid = SweepGrid {
            link_prob: Some(vec![0.3, 0.8]),
            ..SweepGrid::default()
        };
        let solver = SolverOptions::default();
        let a = run_experiment::<f64>(&cfg, &grid, &solver).unwrap();
        let b = run_experiment::<f64>(&cfg, &grid, &solver).unwrap();
        assert_eq!(to_csv(&a), to_csv(&b));
        assert_eq!(to_json(&a), to_json(&b));
        assert_eq!(to_trace_csv(&a), to_trace_csv(&b));
    }

    #[test]
    fn csv_has_13_documented_columns() {
        let cfg = small_config();
        let report = run_experiment::<f64>(&cfg, &SweepGrid::default(), &SolverOptions::default())
            .unwrap();
        let csv = to_csv(&report);
        let mut lines = csv.lines();
        let header = lines.next().unwrap();
        assert_eq!(
            header,
            "k,p,t_measurements,snr_db,pd_empirical,pfa_empirical,pd_fusion,pfa_fusion,\
             pd_theory_finite,pd_theory_asymptotic,pi11_hat,trials,seed"
        );
        assert_eq!(header.split(',').count(), 13);
        let row = lines.next().unwrap();
        assert_eq!(row.split(',').count(), 13);
        assert_eq!(lines.count(), 0);
    }

    #[test]
    fn K_cells_share_sensing_and_prefix_links() {
        // Two cells differing only in K: the shorter cell's final Pd equals
        // the longer cell's trace at the same step.
        let cfg = small_config();
        let grid = SweepGrid {
            consensus_steps: Some(vec![2, 5]),
            ..SweepGrid::default()
        };
        let report =
            run_experiment::<f64>(&cfg, &grid, &SolverOptions::default()).unwrap();
        let short = &report.cells[0];
        let long_trace = &report.traces[1];
        assert_eq!(short.pd_empirical, long_trace.steps[2].pd);
        assert_eq!(short.pfa_empirical, long_trace.steps[2].pfa);
        // Initial-vote metrics agree exactly because sensing is shared.
        assert_eq!(report.traces[0].steps[0].pd, report.traces[1].steps[0].pd);
    }

    #[test]
    fn degenerate_cell_aborts() {
        // An impossible placement makes every trial fail.
        let mut cfg = small_config();
        cfg.area_side = 1.0;
        cfg.min_su_spacing = 50.0;
        let err = run_experiment::<f64>(&cfg, &SweepGrid::default(), &SolverOptions::default())
            .unwrap_err();
        assert!(matches!(err, Error::CellDegenerate { .. }), "{err}");
    }

    #[test]
    fn digest_tracks_configuration_changes() {
        let base = small_config();
        let solver = SolverOptions::default();
        let grid = SweepGrid::default();
        let a = config_digest(&base, &solver, &grid);
        assert_eq!(a.len(), 64);
        let mut changed = base.clone();
        changed.snr_db = 0.0;
        assert_ne!(a, config_digest(&changed, &solver, &grid));
        assert_eq!(a, config_digest(&base, &solver, &grid));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn pooled_counts_reconcile(
            n in 2usize..8,
            m in 1usize..6,
            p_active in 1usize..4,
            seed in 0u64..500,
        ) {
            use rand::{Rng, SeedableRng};
            let p_active = p_active.min(n - 1);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut occ = vec![0u8; n];
            for idx in rand::seq::index::sample(&mut rng, n, p_active) {
                occ[idx] = 1;
            }
            let votes = Array2::from_shape_fn((n, m), |_| u8::from(rng.random::<f64>() < 0.5));
            let outcome = outcome_from_votes(occ, votes);
            let pd = pd_empirical(&[outcome.clone()], 0).unwrap();
            let pfa = pfa_empirical(&[outcome.clone()], 0).unwrap();
            // detected + missed = M * P and flagged + clean = M * (N - P).
            let detected = pd * (m * p_active) as f64;
            let flagged = pfa * (m * (n - p_active)) as f64;
            prop_assert!((detected - detected.round()).abs() < 1e-9);
            prop_assert!((flagged - flagged.round()).abs() < 1e-9);
            let total_ones: u64 = (0..n)
                .flat_map(|j| (0..m).map(move |i| (j, i)))
                .map(|(j, i)| u64::from(outcome.initial_votes.get(j, i)))
                .sum();
            prop_assert_eq!(detected.round() as u64 + flagged.round() as u64, total_ones);
        }
    }
}
