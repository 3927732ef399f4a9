//! Closed-form building blocks for the two-component locally interacting
//! Brownian motion system and its cross-diffusion limit.
//!
//! Everything in this crate is a pure function of its inputs: switching
//! rates, the cross-diffusion matrix of the limit equation, the two-color
//! reduction, ellipticity checks, the ternary Maxwell–Stefan matrix and the
//! parameter maps between the two descriptions. It also hosts the periodic
//! grid types shared by the PDE solver and the particle density estimators,
//! and the small expression language used for initial profiles.

pub mod error;
pub mod expr;
pub mod field;
pub mod matrix;
pub mod maxwell_stefan;
pub mod model;
pub mod torus;

pub use error::ModelError;
pub use field::{DensityField, Grid1D};
pub use matrix::{CrossDiffusionMatrix, Mat2};
pub use maxwell_stefan::{MsParams, PdeCorrespondence};
pub use model::{ModelParams, Species, SpeciesPair};
pub use torus::TorusPoint;
