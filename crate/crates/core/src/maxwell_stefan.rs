//! Ternary Maxwell–Stefan diffusion and its correspondence with the
//! two-component particle limit.
//!
//! Coefficient convention: the binary coefficients `D_ij` enter the flux
//! relation multiplicatively,
//!
//! ```text
//! grad u_i = - sum_{j != i} D_ij (u_j J_i - u_i J_j),   J_3 = -J_1 - J_2,  u_3 = 1 - u_1 - u_2
//! ```
//!
//! which is the convention under which the closed-form matrix
//! [`ms_ternary_matrix`] is exactly the inverse of that relation. Written with
//! `1/D_ij` instead, the inversion yields the same matrix with every `D_ij`
//! replaced by its reciprocal.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::matrix::{CrossDiffusionMatrix, Mat2};
use crate::model::{ModelParams, SpeciesPair};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MsParams {
    pub d12: f64,
    pub d13: f64,
    pub d23: f64,
}

impl MsParams {
    pub fn new(d12: f64, d13: f64, d23: f64) -> Result<Self, ModelError> {
        for (name, v) in [("D12", d12), ("D13", d13), ("D23", d23)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ModelError::InvalidParams(format!("{name} = {v} must be > 0")));
            }
        }
        Ok(MsParams { d12, d13, d23 })
    }

    /// `D12 > max(D13, D23)`, required for the map to particle densities to
    /// be non-negative.
    pub fn satisfies_libm_constraint(&self) -> bool {
        self.d12 > self.d13.max(self.d23)
    }

    fn require_libm_constraint(&self) -> Result<(), ModelError> {
        if self.satisfies_libm_constraint() {
            Ok(())
        } else {
            Err(ModelError::ConstraintViolation(format!(
                "need D12 > max(D13, D23), got D12 = {}, D13 = {}, D23 = {}",
                self.d12, self.d13, self.d23
            )))
        }
    }
}

/// `f(u1, u2) = D13 D23 + D13 (D12 - D23) u1 + D23 (D12 - D13) u2`.
pub fn ms_denominator(u1: f64, u2: f64, ms: &MsParams) -> f64 {
    ms.d13 * ms.d23 + ms.d13 * (ms.d12 - ms.d23) * u1 + ms.d23 * (ms.d12 - ms.d13) * u2
}

/// Diffusion matrix `A(u1, u2)` of the ternary system `du/dt = div(A grad u)`.
pub fn ms_ternary_matrix(u1: f64, u2: f64, ms: &MsParams) -> Result<CrossDiffusionMatrix, ModelError> {
    let f = ms_denominator(u1, u2, ms);
    if f == 0.0 || !f.is_finite() {
        return Err(ModelError::SingularSystem(f));
    }
    Ok(Mat2::new(
        ms.d23 + (ms.d12 - ms.d23) * u1,
        (ms.d12 - ms.d13) * u1,
        (ms.d12 - ms.d23) * u2,
        ms.d13 + (ms.d12 - ms.d13) * u2,
    )
    .scale(1.0 / f))
}

/// Solve the Maxwell–Stefan flux relations at a single state for `(J1, J2)`
/// given the concentration gradients. `J3 = -J1 - J2`.
pub fn ms_flux_inversion_point(u: [f64; 2], grad: [f64; 2], ms: &MsParams) -> Result<[f64; 2], ModelError> {
    let [u1, u2] = u;
    let u3 = 1.0 - u1 - u2;
    // grad u = -B J, rows from i = 1, 2 of the flux relation
    let b = Mat2::new(
        ms.d12 * u2 + ms.d13 * (u1 + u3),
        (ms.d13 - ms.d12) * u1,
        (ms.d23 - ms.d12) * u2,
        ms.d12 * u1 + ms.d23 * (u2 + u3),
    );
    let j = b
        .solve([-grad[0], -grad[1]])
        .ok_or_else(|| ModelError::SingularSystem(ms_denominator(u1, u2, ms)))?;
    if !(j[0].is_finite() && j[1].is_finite()) {
        return Err(ModelError::SingularSystem(ms_denominator(u1, u2, ms)));
    }
    Ok(j)
}

/// Particle-side coefficients produced from Maxwell–Stefan data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LibmCoefficients {
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub lambda: f64,
}

impl LibmCoefficients {
    pub fn with_n(self, n: usize) -> Result<ModelParams, ModelError> {
        ModelParams::new(self.sigma1_sq, self.sigma2_sq, self.lambda, n)
    }
}

/// Maxwell–Stefan data to particle data, scaled by an arbitrary `k > 0`:
/// `rho1 = k D13 (D12 - D23) u1`, `rho2 = k D23 (D12 - D13) u2`,
/// `sigma1^2 = 1/D13`, `sigma2^2 = 1/D23`, `lambda = k D13 D23`.
///
/// This is the parameter-level dictionary; see [`PdeCorrespondence`] for the
/// map under which solutions of the two PDEs correspond.
pub fn libm_from_ms(ms: &MsParams, k: f64, u: SpeciesPair) -> Result<(LibmCoefficients, SpeciesPair), ModelError> {
    ms.require_libm_constraint()?;
    if !(k > 0.0 && k.is_finite()) {
        return Err(ModelError::InvalidParams(format!("k = {k} must be > 0")));
    }
    let coeffs = LibmCoefficients {
        sigma1_sq: 1.0 / ms.d13,
        sigma2_sq: 1.0 / ms.d23,
        lambda: k * ms.d13 * ms.d23,
    };
    let rho = SpeciesPair::new(
        k * ms.d13 * (ms.d12 - ms.d23) * u.rho1,
        k * ms.d23 * (ms.d12 - ms.d13) * u.rho2,
    );
    Ok((coeffs, rho))
}

/// Inverse dictionary for a chosen `D12 > max(1/sigma1^2, 1/sigma2^2)`:
/// `u1 = rho1 / (lambda (sigma2^2 D12 - 1))`, `u2 = rho2 / (lambda (sigma1^2 D12 - 1))`,
/// `D13 = 1/sigma1^2`, `D23 = 1/sigma2^2`.
pub fn ms_from_libm(p: &ModelParams, d12: f64, rho: SpeciesPair) -> Result<(MsParams, SpeciesPair), ModelError> {
    if !(p.lambda > 0.0) {
        return Err(ModelError::ConstraintViolation("lambda must be > 0".into()));
    }
    let ms = MsParams::new(d12, 1.0 / p.sigma1_sq, 1.0 / p.sigma2_sq)?;
    ms.require_libm_constraint()?;
    let u = SpeciesPair::new(
        rho.rho1 / (p.lambda * (p.sigma2_sq * d12 - 1.0)),
        rho.rho2 / (p.lambda * (p.sigma1_sq * d12 - 1.0)),
    );
    Ok((ms, u))
}

/// The `k` for which [`libm_from_ms`] inverts [`ms_from_libm`]: `lambda sigma1^2 sigma2^2`.
pub fn matching_k(p: &ModelParams) -> f64 {
    p.lambda * p.sigma1_sq * p.sigma2_sq
}

/// Solution-level correspondence between `du/dtau = div(A(u) grad u)` and
/// `drho/dt = 1/2 div(D(rho) grad rho)`.
///
/// With `a = k (D12 - D23, D12 - D13)`, `diag(a) A(u) diag(a)^-1 = D(a∘u)` for
/// `sigma1^2 = 1/D13`, `sigma2^2 = 1/D23`, `lambda = k D13 D23`. The factor
/// 1/2 is absorbed by time: `rho(t, x) = a∘u(t/2, x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdeCorrespondence {
    pub ms: MsParams,
    pub k: f64,
}

impl PdeCorrespondence {
    pub fn new(ms: MsParams, k: f64) -> Result<Self, ModelError> {
        ms.require_libm_constraint()?;
        if !(k > 0.0 && k.is_finite()) {
            return Err(ModelError::InvalidParams(format!("k = {k} must be > 0")));
        }
        Ok(PdeCorrespondence { ms, k })
    }

    /// Correspondence for given particle parameters and a free `D12`.
    pub fn from_libm(p: &ModelParams, d12: f64) -> Result<Self, ModelError> {
        if !(p.lambda > 0.0) {
            return Err(ModelError::ConstraintViolation("lambda must be > 0".into()));
        }
        let ms = MsParams::new(d12, 1.0 / p.sigma1_sq, 1.0 / p.sigma2_sq)?;
        Self::new(ms, p.lambda * p.sigma1_sq * p.sigma2_sq)
    }

    pub fn coefficients(&self) -> LibmCoefficients {
        LibmCoefficients {
            sigma1_sq: 1.0 / self.ms.d13,
            sigma2_sq: 1.0 / self.ms.d23,
            lambda: self.k * self.ms.d13 * self.ms.d23,
        }
    }

    /// Density scale factors `a`.
    pub fn scales(&self) -> [f64; 2] {
        [self.k * (self.ms.d12 - self.ms.d23), self.k * (self.ms.d12 - self.ms.d13)]
    }

    pub fn density_from_concentration(&self, u: SpeciesPair) -> SpeciesPair {
        let a = self.scales();
        SpeciesPair::new(a[0] * u.rho1, a[1] * u.rho2)
    }

    pub fn concentration_from_density(&self, rho: SpeciesPair) -> SpeciesPair {
        let a = self.scales();
        SpeciesPair::new(rho.rho1 / a[0], rho.rho2 / a[1])
    }

    pub fn particle_time(&self, ms_time: f64) -> f64 {
        2.0 * ms_time
    }

    pub fn ms_time(&self, particle_time: f64) -> f64 {
        0.5 * particle_time
    }
}
