use twocomp_core::maxwell_stefan::{ms_flux_inversion_point, ms_ternary_matrix};
use twocomp_core::model::diffusion_matrix;
use twocomp_core::{DensityField, Mat2, ModelError, ModelParams, MsParams, SpeciesPair};

#[inline]
pub fn midpoint(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

/// A diffusive system `d/dt v = div(K(v) grad v)` for two unknowns.
pub trait FluxModel: Send + Sync {
    /// Mobility `K(v)`.
    fn mobility(&self, state: [f64; 2]) -> Result<Mat2, ModelError>;

    /// Diffusive flux `K(mid) (right - left)/dx` across an interface.
    fn flux(&self, left: [f64; 2], right: [f64; 2], dx: f64) -> Result<[f64; 2], ModelError> {
        let k = self.mobility(midpoint(left, right))?;
        Ok(k.mul_vec([(right[0] - left[0]) / dx, (right[1] - left[1]) / dx]))
    }

    /// Spectral radius of the model's diffusion matrix, used by the explicit
    /// stability bound `dt <= safety dx^2 / (2 radius)`.
    fn diffusion_radius(&self, state: [f64; 2]) -> Result<f64, ModelError> {
        Ok(self.mobility(state)?.spectral_radius())
    }
}

/// Particle limit: mobility `D(rho)/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LibmFlux {
    pub params: ModelParams,
}

impl LibmFlux {
    pub fn new(params: ModelParams) -> Self {
        LibmFlux { params }
    }
}

impl FluxModel for LibmFlux {
    fn mobility(&self, state: [f64; 2]) -> Result<Mat2, ModelError> {
        Ok(self.matrix(state)?.scale(0.5))
    }

    fn diffusion_radius(&self, state: [f64; 2]) -> Result<f64, ModelError> {
        Ok(self.matrix(state)?.spectral_radius())
    }
}

impl LibmFlux {
    // The matrix is defined for non-negative densities only; small negative
    // undershoots of the scheme are evaluated by continuation of the formula.
    fn matrix(&self, state: [f64; 2]) -> Result<Mat2, ModelError> {
        if state[0] >= 0.0 && state[1] >= 0.0 {
            return diffusion_matrix(SpeciesPair::new(state[0], state[1]), &self.params);
        }
        let p = &self.params;
        let q = p.lambda + state[0] / p.sigma1_sq + state[1] / p.sigma2_sq;
        if !(q > 0.0) {
            return Err(ModelError::NegativeDensity { rho1: state[0], rho2: state[1] });
        }
        Ok(Mat2::new(
            state[0] + p.lambda * p.sigma1_sq,
            state[0],
            state[1],
            state[1] + p.lambda * p.sigma2_sq,
        )
        .scale(1.0 / q))
    }
}

/// Ternary Maxwell–Stefan system through the closed-form matrix `A(u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MsMatrixFlux {
    pub ms: MsParams,
}

impl FluxModel for MsMatrixFlux {
    fn mobility(&self, state: [f64; 2]) -> Result<Mat2, ModelError> {
        ms_ternary_matrix(state[0], state[1], &self.ms)
    }
}

/// Ternary Maxwell–Stefan system by solving the flux relations at every
/// interface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MsInversionFlux {
    pub ms: MsParams,
}

impl FluxModel for MsInversionFlux {
    fn mobility(&self, state: [f64; 2]) -> Result<Mat2, ModelError> {
        let c1 = ms_flux_inversion_point(state, [1.0, 0.0], &self.ms)?;
        let c2 = ms_flux_inversion_point(state, [0.0, 1.0], &self.ms)?;
        Ok(Mat2::new(-c1[0], -c2[0], -c1[1], -c2[1]))
    }

    fn flux(&self, left: [f64; 2], right: [f64; 2], dx: f64) -> Result<[f64; 2], ModelError> {
        let grad = [(right[0] - left[0]) / dx, (right[1] - left[1]) / dx];
        let j = ms_flux_inversion_point(midpoint(left, right), grad, &self.ms)?;
        Ok([-j[0], -j[1]])
    }
}

/// Flux at every interface; entry `k` is between cells `k` and `k+1`.
pub fn interface_flux<F: FluxModel + ?Sized>(field: &DensityField, model: &F) -> Result<Vec<[f64; 2]>, ModelError> {
    let m = field.len();
    let dx = 1.0 / m as f64;
    (0..m)
        .map(|k| model.flux(field.at(k), field.at((k + 1) % m), dx))
        .collect()
}

/// Maxwell–Stefan fluxes `(J1, J2)` at every interface of a concentration
/// field. Sign convention `J = -A(u) grad u`.
pub fn ms_flux_inversion(u: &DensityField, ms: &MsParams) -> Result<Vec<[f64; 2]>, ModelError> {
    let m = u.len();
    let dx = 1.0 / m as f64;
    (0..m)
        .map(|k| {
            let (l, r) = (u.at(k), u.at((k + 1) % m));
            ms_flux_inversion_point(midpoint(l, r), [(r[0] - l[0]) / dx, (r[1] - l[1]) / dx], ms)
        })
        .collect()
}
