//! Rates and diffusion matrices of the two-component system.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::matrix::{CrossDiffusionMatrix, Mat2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Species {
    One,
    Two,
}

impl Species {
    pub const ALL: [Species; 2] = [Species::One, Species::Two];

    /// Zero-based index, handy for per-species arrays.
    #[inline]
    pub fn index(self) -> usize {
        match self {
            Species::One => 0,
            Species::Two => 1,
        }
    }

    pub fn from_index(i: usize) -> Species {
        if i == 0 {
            Species::One
        } else {
            Species::Two
        }
    }
}

/// Physical constants of the particle system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub lambda: f64,
    /// Particle count.
    pub n: usize,
}

impl ModelParams {
    pub fn new(sigma1_sq: f64, sigma2_sq: f64, lambda: f64, n: usize) -> Result<Self, ModelError> {
        let p = ModelParams { sigma1_sq, sigma2_sq, lambda, n };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.sigma1_sq > 0.0 && self.sigma1_sq.is_finite()) {
            return Err(ModelError::InvalidParams(format!("sigma1_sq = {} must be > 0", self.sigma1_sq)));
        }
        if !(self.sigma2_sq > 0.0 && self.sigma2_sq.is_finite()) {
            return Err(ModelError::InvalidParams(format!("sigma2_sq = {} must be > 0", self.sigma2_sq)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(ModelError::InvalidParams(format!("lambda = {} must be >= 0", self.lambda)));
        }
        if self.n == 0 {
            return Err(ModelError::InvalidParams("N must be at least 1".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn sigma_sq(&self, c: Species) -> f64 {
        match c {
            Species::One => self.sigma1_sq,
            Species::Two => self.sigma2_sq,
        }
    }

    /// Normalized rates `lambda_{c1,c2}` as a 2×2 table.
    pub fn rate_table(&self) -> [[f64; 2]; 2] {
        let mut t = [[0.0; 2]; 2];
        for a in Species::ALL {
            for b in Species::ALL {
                t[a.index()][b.index()] = switch_rate(a, b, self);
            }
        }
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SpeciesPair {
    pub rho1: f64,
    pub rho2: f64,
}

impl SpeciesPair {
    pub fn new(rho1: f64, rho2: f64) -> Self {
        SpeciesPair { rho1, rho2 }
    }

    pub fn total(&self) -> f64 {
        self.rho1 + self.rho2
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.rho1, self.rho2]
    }

    fn check_nonnegative(&self) -> Result<(), ModelError> {
        if self.rho1 < 0.0 || self.rho2 < 0.0 || self.rho1.is_nan() || self.rho2.is_nan() {
            return Err(ModelError::NegativeDensity { rho1: self.rho1, rho2: self.rho2 });
        }
        Ok(())
    }
}

impl From<[f64; 2]> for SpeciesPair {
    fn from(v: [f64; 2]) -> Self {
        SpeciesPair::new(v[0], v[1])
    }
}

/// Label-switching intensity per unit local time between a particle of type
/// `c1` and one of type `c2`, before the factor `N`: `lambda * s_c1 * s_c2`.
pub fn switch_rate(c1: Species, c2: Species, p: &ModelParams) -> f64 {
    p.lambda * p.sigma_sq(c1) * p.sigma_sq(c2)
}

/// `lambda + rho1/sigma1^2 + rho2/sigma2^2`, the common denominator of the
/// limit diffusion matrix.
pub fn mobility_denominator(rho: SpeciesPair, p: &ModelParams) -> f64 {
    p.lambda + rho.rho1 / p.sigma1_sq + rho.rho2 / p.sigma2_sq
}

/// Cross-diffusion matrix of the hydrodynamic limit,
/// `(rho 1^T + lambda diag(sigma^2)) / (lambda + rho1/sigma1^2 + rho2/sigma2^2)`.
pub fn diffusion_matrix(rho: SpeciesPair, p: &ModelParams) -> Result<CrossDiffusionMatrix, ModelError> {
    rho.check_nonnegative()?;
    let q = mobility_denominator(rho, p);
    if !(q > 0.0) {
        return Err(ModelError::DegenerateDenominator(q));
    }
    let inv = 1.0 / q;
    Ok(Mat2::new(
        (rho.rho1 + p.lambda * p.sigma1_sq) * inv,
        rho.rho1 * inv,
        rho.rho2 * inv,
        (rho.rho2 + p.lambda * p.sigma2_sq) * inv,
    ))
}

/// Self-diffusion coefficient of the one-component system, `lambda / (lambda + rho)`.
pub fn self_diffusion(rho: f64, lambda: f64) -> f64 {
    lambda / (lambda + rho)
}

/// Two-color matrix with bulk diffusion `D = 1` and self-diffusion
/// `S = lambda / (lambda + rho)`.
pub fn two_color_matrix(rho: SpeciesPair, lambda: f64) -> Result<CrossDiffusionMatrix, ModelError> {
    rho.check_nonnegative()?;
    let total = rho.total();
    if !(total > 0.0) {
        return Err(ModelError::ZeroTotalDensity(total));
    }
    let s = self_diffusion(total, lambda);
    let bulk = 1.0;
    let (f1, f2) = (rho.rho1 / total, rho.rho2 / total);
    Ok(Mat2::new(
        f1 * bulk + f2 * s,
        f1 * (bulk - s),
        f2 * (bulk - s),
        f2 * bulk + f1 * s,
    ))
}

/// For 2×2 matrices, all eigenvalues have positive real part iff trace and
/// determinant are both positive.
pub fn is_normally_elliptic(m: &Mat2) -> bool {
    m.trace() > 0.0 && m.det() > 0.0
}

/// `alpha = 1 / (lambda + rho_bar1/sigma1^2 + rho_bar2/sigma2^2)`, the weight
/// of the auxiliary martingale.
pub fn alpha_const(p: &ModelParams, rho_bar1: f64, rho_bar2: f64) -> Result<f64, ModelError> {
    let rho = SpeciesPair::new(rho_bar1, rho_bar2);
    rho.check_nonnegative()?;
    let q = mobility_denominator(rho, p);
    if !(q > 0.0) {
        return Err(ModelError::DegenerateDenominator(q));
    }
    Ok(1.0 / q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(s1: f64, s2: f64, lambda: f64) -> ModelParams {
        ModelParams::new(s1, s2, lambda, 100).unwrap()
    }

    #[test]
    fn switch_rate_examples() {
        let p = params(1.0, 2.0, 1.0);
        assert_eq!(switch_rate(Species::One, Species::Two, &p), 2.0);
        assert_eq!(switch_rate(Species::Two, Species::One, &p), 2.0);
        assert_eq!(switch_rate(Species::One, Species::One, &p), 1.0);
        assert_eq!(switch_rate(Species::Two, Species::Two, &p), 4.0);
        let p0 = params(3.0, 5.0, 0.0);
        assert_eq!(switch_rate(Species::One, Species::Two, &p0), 0.0);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(ModelParams::new(0.0, 1.0, 1.0, 1).is_err());
        assert!(ModelParams::new(1.0, -1.0, 1.0, 1).is_err());
        assert!(ModelParams::new(1.0, 1.0, -0.1, 1).is_err());
        assert!(ModelParams::new(1.0, 1.0, 1.0, 0).is_err());
        assert!(ModelParams::new(1.0, 1.0, 0.0, 1).is_ok());
    }

    #[test]
    fn diffusion_matrix_examples() {
        let p = params(1.0, 2.0, 1.0);
        let vac = diffusion_matrix(SpeciesPair::new(0.0, 0.0), &p).unwrap();
        assert!(vac.max_abs_diff(&Mat2::diag(1.0, 2.0)) < 1e-15);

        let d = diffusion_matrix(SpeciesPair::new(1.0, 1.0), &p).unwrap();
        assert!(d.max_abs_diff(&Mat2::new(0.8, 0.4, 0.4, 1.2)) < 1e-12);

        let q = params(1.0, 1.0, 1.0);
        let d = diffusion_matrix(SpeciesPair::new(0.3, 0.7), &q).unwrap();
        assert!(d.max_abs_diff(&Mat2::new(0.65, 0.15, 0.35, 0.85)) < 1e-12);
    }

    #[test]
    fn degenerate_denominator_is_an_error() {
        let p = params(1.0, 2.0, 0.0);
        assert!(matches!(
            diffusion_matrix(SpeciesPair::new(0.0, 0.0), &p),
            Err(ModelError::DegenerateDenominator(_))
        ));
        assert!(alpha_const(&p, 0.0, 0.0).is_err());
        assert!(diffusion_matrix(SpeciesPair::new(-0.1, 0.5), &params(1.0, 1.0, 1.0)).is_err());
    }

    #[test]
    fn two_color_examples() {
        let m = two_color_matrix(SpeciesPair::new(0.3, 0.7), 1.0).unwrap();
        assert!(m.max_abs_diff(&Mat2::new(0.65, 0.15, 0.35, 0.85)) < 1e-12);
        assert_eq!(self_diffusion(1.0, 1.0), 0.5);
        for &(rho, lambda) in &[(0.5, 1.0), (2.0, 0.3), (1.0, 7.0)] {
            let s = self_diffusion(rho, lambda);
            let m = two_color_matrix(SpeciesPair::new(rho, 0.0), lambda).unwrap();
            assert!(m.max_abs_diff(&Mat2::new(1.0, 1.0 - s, 0.0, s)) < 1e-15);
        }
        assert!(matches!(
            two_color_matrix(SpeciesPair::new(0.0, 0.0), 1.0),
            Err(ModelError::ZeroTotalDensity(_))
        ));
    }

    #[test]
    fn ellipticity_examples() {
        assert!(is_normally_elliptic(&Mat2::IDENTITY));
        let m = Mat2::new(0.8, 0.4, 0.4, 1.2);
        assert!((m.trace() - 2.0).abs() < 1e-15 && (m.det() - 0.8).abs() < 1e-15);
        assert!(is_normally_elliptic(&m));
        assert!(!is_normally_elliptic(&Mat2::diag(1.0, -1.0)));
    }

    #[test]
    fn alpha_examples() {
        let p = params(1.0, 2.0, 1.0);
        assert!((alpha_const(&p, 0.5, 0.5).unwrap() - 1.0 / 1.75).abs() < 1e-15);
        assert_eq!(alpha_const(&p, 0.0, 0.0).unwrap(), 1.0);
        let p2 = params(1.0, 1.0, 2.0);
        assert!((alpha_const(&p2, 0.7, 1.3).unwrap() - 0.25).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn two_color_consistency(r1 in 0.0f64..5.0, r2 in 0.0f64..5.0, lambda in 0.01f64..20.0) {
            prop_assume!(r1 + r2 > 1e-9);
            let p = params(1.0, 1.0, lambda);
            let rho = SpeciesPair::new(r1, r2);
            let a = diffusion_matrix(rho, &p).unwrap();
            let b = two_color_matrix(rho, lambda).unwrap();
            prop_assert!(a.max_abs_diff(&b) < 1e-12);
        }

        #[test]
        fn weighted_column_sums_are_one(
            r1 in 0.0f64..10.0, r2 in 0.0f64..10.0,
            s1 in 0.05f64..10.0, s2 in 0.05f64..10.0, lambda in 0.01f64..10.0,
        ) {
            let p = params(s1, s2, lambda);
            let d = diffusion_matrix(SpeciesPair::new(r1, r2), &p).unwrap();
            prop_assert!((d.get(0, 0) / s1 + d.get(1, 0) / s2 - 1.0).abs() < 1e-14);
            prop_assert!((d.get(0, 1) / s1 + d.get(1, 1) / s2 - 1.0).abs() < 1e-14);
        }

        #[test]
        fn determinant_closed_form(
            r1 in 0.0f64..10.0, r2 in 0.0f64..10.0,
            s1 in 0.05f64..10.0, s2 in 0.05f64..10.0, lambda in 0.01f64..10.0,
        ) {
            let p = params(s1, s2, lambda);
            let rho = SpeciesPair::new(r1, r2);
            let d = diffusion_matrix(rho, &p).unwrap();
            let q = mobility_denominator(rho, &p);
            let closed = lambda * s2 * r1 + lambda * s1 * r2 + lambda * lambda * s1 * s2;
            let lhs = d.det() * q * q;
            prop_assert!((lhs - closed).abs() <= 1e-12 * closed.max(1.0));
        }
    }
}
