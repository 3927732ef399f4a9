//! Finite-volume solvers on the periodic unit interval for
//!
//! * the particle limit `d/dt rho = 1/2 div(D(rho) grad rho)`,
//! * the ternary Maxwell–Stefan system, either through its closed-form
//!   matrix or by inverting the flux relations pointwise,
//! * the staged two-color reference (exact discrete heat flow for the total
//!   density, then a linear equation for the first color).
//!
//! Cells are indexed by `k` with centre `x_k = k/M`. Interface `k` sits
//! between cells `k` and `k+1` (periodically). All schemes are conservative:
//! `rho_k += dt/dx (F_k - F_{k-1})`, where `F` is the diffusive flux
//! `K(mid) (rho_{k+1} - rho_k)/dx` and `K` the mobility of the model.

pub mod error;
pub mod flux;
pub mod linear;
pub mod residual;
pub mod solver;
pub mod two_color;

pub use error::SolveError;
pub use flux::{interface_flux, ms_flux_inversion, FluxModel, LibmFlux, MsInversionFlux, MsMatrixFlux};
pub use residual::master_residual;
pub use solver::{solve_trajectory, step_fields, Scheme, Snapshots, SolverConfig, Trajectory};
pub use two_color::two_color_reference_solve;
