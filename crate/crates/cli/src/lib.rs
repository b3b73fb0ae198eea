//! Experiment runner for the specsense simulator: TOML configuration,
//! figure presets, and artifact emission (CSV / JSON / per-step traces).

pub mod config;
pub mod presets;
pub mod run;

pub use config::{parse_config, ConfigError};
pub use presets::Preset;
pub use run::{run, Emit, RunError, RunManifest, RunSummary};

/// Environment variable that overrides the configured master seed.
pub const SEED_ENV_VAR: &str = "SPECSENSE_SEED";
