//! Physical world of one Monte Carlo trial: node placement, sparse channel
//! occupancy, fading/path-loss gains, and the composite primary-signal matrix.
//!
//! Conventions: there are `N` channels, each with a notional transmitter
//! location (only `P` of them are active), and `M` sensing SUs. The gain
//! matrix is `M x N` (row = SU, column = channel); the signal matrix is
//! `N x M` (column `i` = the sparse signal seen by SU `i`), with the rows of
//! inactive channels identically zero.

use ndarray::Array2;
use rand::Rng;
use rand::seq::index::sample as sample_indices;

use crate::error::{Error, Result};
use crate::real::Real;
use crate::rng::substream;

/// Total rejected SU candidates tolerated before placement gives up.
const PLACEMENT_RETRY_BUDGET: usize = 10_000;

/// Every tunable of one experiment cell.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScenarioConfig {
    /// Number of channels N.
    pub n_channels: usize,
    /// Number of secondary users M.
    pub n_sus: usize,
    /// Number of active primary users P (occupied channels).
    pub n_pus: usize,
    /// Number of compressed measurements T per SU.
    pub n_measurements: usize,
    /// Number of consensus steps K.
    pub consensus_steps: usize,
    /// Per-pair link probability p.
    pub link_prob: f64,
    /// Path loss exponent alpha.
    pub pathloss_exp: f64,
    /// Measurement SNR in dB (sets the noise variance; see the sensing module).
    pub snr_db: f64,
    /// Local detection threshold eta; `None` derives it from the trial geometry.
    pub threshold: Option<f64>,
    /// Side of the square deployment area, meters.
    pub area_side: f64,
    /// Minimum distance between any two SUs, meters.
    pub min_su_spacing: f64,
    /// Monte Carlo trials per sweep cell.
    pub trials: usize,
    /// Master seed of the experiment.
    pub rng_seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            n_channels: 200,
            n_sus: 12,
            n_pus: 4,
            n_measurements: 50,
            consensus_steps: 10,
            link_prob: 0.8,
            pathloss_exp: 2.0,
            snr_db: 10.0,
            threshold: None,
            area_side: 1000.0,
            min_su_spacing: 10.0,
            trials: 500,
            rng_seed: 1,
        }
    }
}

impl ScenarioConfig {
    /// Check the configuration invariants, logging a warning when the
    /// measurement count is below the `P ln N` sparse-recovery condition.
    pub fn validate(&self) -> Result<()> {
        if self.n_pus == 0 || self.n_pus > self.n_channels {
            return Err(Error::invalid(
                "n_pus",
                format!("need 0 < P <= N, got P={} N={}", self.n_pus, self.n_channels),
            ));
        }
        if self.n_measurements == 0 || self.n_measurements > self.n_channels {
            return Err(Error::invalid(
                "n_measurements",
                format!(
                    "need 0 < T <= N, got T={} N={}",
                    self.n_measurements, self.n_channels
                ),
            ));
        }
        if self.n_sus == 0 {
            return Err(Error::invalid("n_sus", "need M >= 1"));
        }
        if self.consensus_steps == 0 {
            return Err(Error::invalid("consensus_steps", "need K >= 1"));
        }
        if !(self.link_prob > 0.0 && self.link_prob <= 1.0) {
            return Err(Error::invalid(
                "link_prob",
                format!("need 0 < p <= 1, got {}", self.link_prob),
            ));
        }
        if !(self.pathloss_exp > 0.0) {
            return Err(Error::invalid(
                "pathloss_exp",
                format!("need alpha > 0, got {}", self.pathloss_exp),
            ));
        }
        if !(self.area_side > 0.0) {
            return Err(Error::invalid(
                "area_side",
                format!("need a positive area side, got {}", self.area_side),
            ));
        }
        if self.min_su_spacing < 0.0 {
            return Err(Error::invalid("min_su_spacing", "must be nonnegative"));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::invalid("snr_db", "must be finite"));
        }
        if let Some(eta) = self.threshold {
            if !(eta > 0.0) {
                return Err(Error::invalid(
                    "threshold",
                    format!("need eta > 0, got {eta}"),
                ));
            }
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials", "need at least one trial"));
        }
        if !self.recovery_condition_holds() {
            log::warn!(
                "T = {} is below P ln N = {:.1}; sparse recovery may be unreliable",
                self.n_measurements,
                self.n_pus as f64 * (self.n_channels as f64).ln()
            );
        }
        Ok(())
    }

    /// Whether `T >= P ln N`, the rule-of-thumb measurement count for
    /// reliable sparse recovery.
    pub fn recovery_condition_holds(&self) -> bool {
        self.n_measurements as f64 >= self.n_pus as f64 * (self.n_channels as f64).ln()
    }
}

/// A point in the deployment plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point<R> {
    pub x: R,
    pub y: R,
}

impl<R: Real> Point<R> {
    pub fn distance(&self, other: &Point<R>) -> R {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx * dx + dy * dy).sqrt()
    }
}

/// Diagonal of the channel-state matrix: 1 where a channel is occupied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Occupancy {
    diag: Vec<u8>,
}

impl Occupancy {
    /// Build from an explicit 0/1 vector.
    pub fn from_diag(diag: Vec<u8>) -> Result<Self> {
        if diag.iter().any(|&b| b > 1) {
            return Err(Error::invalid("occupancy", "entries must be 0 or 1"));
        }
        Ok(Occupancy { diag })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn is_active(&self, channel: usize) -> bool {
        self.diag[channel] == 1
    }

    pub fn n_active(&self) -> usize {
        self.diag.iter().map(|&b| b as usize).sum()
    }

    pub fn diag(&self) -> &[u8] {
        &self.diag
    }

    pub fn active_channels(&self) -> impl Iterator<Item = usize> + '_ {
        self.diag
            .iter()
            .enumerate()
            .filter(|(_, &b)| b == 1)
            .map(|(j, _)| j)
    }
}

/// Path-loss-and-fading gains, `M x N` (SU row, channel column).
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix<R> {
    g: Array2<R>,
}

impl<R: Real> GainMatrix<R> {
    /// Wrap an explicit nonnegative gain matrix; used by synthetic pipelines.
    pub fn from_array(g: Array2<R>) -> Result<Self> {
        if g.iter().any(|&v| v < R::zero()) {
            return Err(Error::invalid("gains", "entries must be nonnegative"));
        }
        Ok(GainMatrix { g })
    }

    pub fn matrix(&self) -> &Array2<R> {
        &self.g
    }

    pub fn n_sus(&self) -> usize {
        self.g.nrows()
    }

    pub fn n_channels(&self) -> usize {
        self.g.ncols()
    }
}

/// Composite primary signals, `N x M` (channel row, SU column).
#[derive(Debug, Clone, PartialEq)]
pub struct SignalMatrix<R> {
    x: Array2<R>,
}

impl<R: Real> SignalMatrix<R> {
    /// Wrap a raw matrix; used by tests and synthetic pipelines.
    pub fn from_array(x: Array2<R>) -> Self {
        SignalMatrix { x }
    }

    pub fn matrix(&self) -> &Array2<R> {
        &self.x
    }

    pub fn n_channels(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_sus(&self) -> usize {
        self.x.ncols()
    }
}

/// The realized world of one trial.
#[derive(Debug, Clone)]
pub struct Scenario<R> {
    /// One notional transmitter position per channel index.
    pub pu_positions: Vec<Point<R>>,
    pub su_positions: Vec<Point<R>>,
    pub occupancy: Occupancy,
    pub gains: GainMatrix<R>,
    pub signals: SignalMatrix<R>,
}

/// Place one transmitter per channel and all SUs uniformly in the square,
/// enforcing the minimum SU spacing by rejection sampling.
///
/// The transmitters are placed first, then the SUs, so a fixed stream yields
/// a fixed geometry. Fails with [`Error::PlacementFailure`] once the total
/// rejection budget is exhausted.
pub fn place_nodes<R: Real, G: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    rng: &mut G,
) -> Result<(Vec<Point<R>>, Vec<Point<R>>)> {
    let side = R::of(cfg.area_side);
    let spacing = R::of(cfg.min_su_spacing);
    let draw = |rng: &mut G| Point {
        x: R::uniform(rng, R::zero(), side),
        y: R::uniform(rng, R::zero(), side),
    };

    let pu_positions: Vec<Point<R>> = (0..cfg.n_channels).map(|_| draw(rng)).collect();

    let mut su_positions: Vec<Point<R>> = Vec::with_capacity(cfg.n_sus);
    let mut rejected = 0usize;
    while su_positions.len() < cfg.n_sus {
        let candidate = draw(rng);
        if su_positions
            .iter()
            .all(|p| p.distance(&candidate) >= spacing)
        {
            su_positions.push(candidate);
        } else {
            rejected += 1;
            if rejected > PLACEMENT_RETRY_BUDGET {
                return Err(Error::PlacementFailure {
                    placed: su_positions.len(),
                    requested: cfg.n_sus,
                    attempts: rejected,
                    min_spacing: cfg.min_su_spacing,
                });
            }
        }
    }
    Ok((pu_positions, su_positions))
}

/// Draw a uniformly random P-subset of the N channels as occupied.
pub fn draw_occupancy<G: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut G) -> Result<Occupancy> {
    if cfg.n_pus > cfg.n_channels {
        return Err(Error::invalid(
            "n_pus",
            format!("P={} exceeds N={}", cfg.n_pus, cfg.n_channels),
        ));
    }
    let mut diag = vec![0u8; cfg.n_channels];
    for idx in sample_indices(rng, cfg.n_channels, cfg.n_pus) {
        diag[idx] = 1;
    }
    Ok(Occupancy { diag })
}

/// Path loss times Rayleigh fade magnitude for one SU-channel pair.
///
/// `h_mag` is the magnitude of a unit-variance circularly symmetric complex
/// Gaussian, so `E[gain^2 * d^alpha] = 1`.
pub fn gain_entry<R: Real>(distance: R, pathloss_exp: R, h_mag: R) -> R {
    distance.powf(-pathloss_exp / R::of(2.0)) * h_mag
}

/// Sample the full gain matrix: fresh unit-variance complex-Gaussian fades on
/// top of deterministic path loss. Fades are drawn SU-major, channel-minor.
pub fn channel_gains<R: Real, G: Rng + ?Sized>(
    pu_positions: &[Point<R>],
    su_positions: &[Point<R>],
    pathloss_exp: R,
    rng: &mut G,
) -> Result<GainMatrix<R>> {
    let m = su_positions.len();
    let n = pu_positions.len();
    let half_sqrt = R::of(0.5).sqrt();
    let mut g = Array2::zeros((m, n));
    for (i, su) in su_positions.iter().enumerate() {
        for (j, pu) in pu_positions.iter().enumerate() {
            let d = su.distance(pu);
            if d == R::zero() {
                return Err(Error::DegenerateGeometry { su: i, channel: j });
            }
            // Re and Im parts each N(0, 1/2) so that E|h|^2 = 1.
            let re = R::standard_normal(rng) * half_sqrt;
            let im = R::standard_normal(rng) * half_sqrt;
            let h_mag = (re * re + im * im).sqrt();
            g[(i, j)] = gain_entry(d, pathloss_exp, h_mag);
        }
    }
    Ok(GainMatrix { g })
}

/// Compose the signal matrix `X = diag(occupancy) * G^T`: row `j` of `X` is
/// the `j`th column of `G^T` when channel `j` is occupied and zero otherwise.
pub fn compose_signals<R: Real>(occ: &Occupancy, gains: &GainMatrix<R>) -> Result<SignalMatrix<R>> {
    if occ.len() != gains.n_channels() {
        return Err(Error::DimensionMismatch {
            context: "compose_signals",
            expected: format!("{} channels", occ.len()),
            got: format!("{} gain columns", gains.n_channels()),
        });
    }
    let n = occ.len();
    let m = gains.n_sus();
    let mut x = Array2::zeros((n, m));
    for j in occ.active_channels() {
        for i in 0..m {
            x[(j, i)] = gains.g[(i, j)];
        }
    }
    Ok(SignalMatrix { x })
}

impl<R: Real> Scenario<R> {
    /// Generate the full world of one trial from the hierarchical streams
    /// `(master, "placement" | "occupancy" | "fading", trial)`.
    pub fn generate(cfg: &ScenarioConfig, master_seed: u64, trial: u64) -> Result<Self> {
        let mut placement_rng = substream(master_seed, "placement", trial);
        let (pu_positions, su_positions) = place_nodes(cfg, &mut placement_rng)?;

        let mut occupancy_rng = substream(master_seed, "occupancy", trial);
        let occupancy = draw_occupancy(cfg, &mut occupancy_rng)?;

        let mut fading_rng = substream(master_seed, "fading", trial);
        let gains = channel_gains(
            &pu_positions,
            &su_positions,
            R::of(cfg.pathloss_exp),
            &mut fading_rng,
        )?;
        let signals = compose_signals(&occupancy, &gains)?;

        Ok(Scenario {
            pu_positions,
            su_positions,
            occupancy,
            gains,
            signals,
        })
    }
}
