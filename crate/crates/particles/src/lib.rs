//! Time-stepped simulation of `N` Brownian particles of two types on the
//! unit torus. Neighbours reflect off each other; along the local time of
//! each contact a Poisson clock swaps the labels (id and type) of the pair.
//!
//! Positions are kept in cyclic order in *slots*. A swap exchanges the ids
//! and types held by two adjacent slots; reflection never changes the slot
//! order. Per-particle quantities (local-time aggregates, martingale
//! diagnostics) are indexed by id.

pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod ledger;
pub mod state;

pub use diagnostics::{replacement_statistic, QvRecorder, ReplacementRecorder};
pub use dynamics::{advance, reflect_gap, reflect_pair, LocalTimeScheme, SimConfig, Simulator, Snapshot, StepReport};
pub use error::SimError;
pub use ledger::{accrue_and_switch, qv_predicted, LocalTimeLedger};
pub use state::{empirical_density, init_iid, z_values, ParticleState};
