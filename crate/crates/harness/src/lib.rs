//! Experiment harness for the two-component particle system and its
//! cross-diffusion limit.
//!
//! A JSON configuration describes the model, the particle ensemble, the PDE
//! solver and the initial profiles. The commands run particle ensembles in
//! parallel (results are reduced in replica order, so outputs do not depend
//! on the thread count), solve the PDE, compare the two, compute the
//! martingale and local-time diagnostics and sweep over `N`. Every output
//! directory gets a `manifest.json` with the configuration digest, seeds and
//! file digests.

pub mod commands;
pub mod config;
pub mod ensemble;
pub mod error;
pub mod experiments;
pub mod output;
pub mod plot;
pub mod seeds;
pub mod stats;

pub use commands::{run_command, CommandOutput, RunOptions};
pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
