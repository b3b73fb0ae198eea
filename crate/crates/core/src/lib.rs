//! Distributed sparse spectrum sensing for infrastructure-less cognitive
//! radio networks.
//!
//! The pipeline simulated here: each secondary user (SU) takes a small number
//! of Gaussian-projected measurements of `N` channels of which only `P`
//! carry an active transmitter, recovers the sparse occupancy vector by
//! l1-constrained minimization, thresholds it into binary channel votes, and
//! then runs a diversity-based binary consensus protocol over a time-varying
//! Bernoulli link graph. A centralized majority-rule fusion of the same
//! votes serves as the baseline, and closed-form detection-probability
//! curves overlay the Monte Carlo estimates.
//!
//! Modules follow the pipeline:
//!
//! * [`scenario`] — node placement, occupancy, fading gains, signal matrix;
//! * [`sensing`] — measurement synthesis, l1 recovery, threshold votes;
//! * [`consensus`] — link process, diversity consensus, fusion baseline;
//! * [`theory`] — closed-form detection probabilities;
//! * [`metrics`] — Monte Carlo orchestration, pooled Pd/Pfa, reports;
//! * [`rng`] — deterministic hierarchical streams;
//! * [`real`] — the scalar abstraction (`f32`/`f64`) the math is generic over.
//!
//! Concrete `f64` aliases for the generic types are exported below; the CLI
//! and the report formats use `f64` throughout.

pub mod consensus;
pub mod error;
pub mod metrics;
pub mod real;
pub mod rng;
pub mod scenario;
pub mod sensing;
pub mod theory;

pub use error::{Error, Result};
pub use real::Real;

/// `f64` instantiations of the scalar-generic core types.
pub type Point64 = scenario::Point<f64>;
pub type Scenario64 = scenario::Scenario<f64>;
pub type GainMatrix64 = scenario::GainMatrix<f64>;
pub type SignalMatrix64 = scenario::SignalMatrix<f64>;
pub type MeasurementSet64 = sensing::MeasurementSet<f64>;
pub type RecoveredSignal64 = sensing::RecoveredSignal<f64>;
pub type LagrangianFit64 = sensing::LagrangianFit<f64>;
pub type ConsensusState64 = consensus::ConsensusState<f64>;
pub type TheoryParams64 = theory::TheoryParams<f64>;
