//! Error types shared across the simulation pipeline.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Rejection sampling could not place all SUs with the required spacing.
    #[error(
        "SU placement failed: placed {placed} of {requested} nodes after {attempts} rejected \
         candidates (min spacing {min_spacing} m too dense for the area)"
    )]
    PlacementFailure {
        placed: usize,
        requested: usize,
        attempts: usize,
        min_spacing: f64,
    },

    /// An SU sits exactly on a channel's transmitter, making the path loss blow up.
    #[error("SU {su} is collocated with the transmitter of channel {channel}")]
    DegenerateGeometry { su: usize, channel: usize },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        got: String,
    },

    /// Iteration cap hit while the objective failed to decrease.
    #[error("l1 solver diverged: objective not decreasing after {max_iters} iterations")]
    SolverDiverged { max_iters: usize },

    #[error("no samples to estimate from")]
    NoSamples,

    #[error("no active channels in any trial outcome")]
    NoActiveChannels,

    #[error("no inactive channels in any trial outcome")]
    NoInactiveChannels,

    /// More than 10% of a sweep cell's trials failed.
    #[error(
        "cell {cell_id} degenerate: {failed} of {total} trials failed (limit 10%); \
         first failure: {first}"
    )]
    CellDegenerate {
        cell_id: String,
        failed: usize,
        total: usize,
        first: String,
    },

    #[error("invalid configuration: {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field,
            reason: reason.into(),
        }
    }
}
