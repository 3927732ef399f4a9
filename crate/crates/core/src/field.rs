//! Periodic grid functions for two species.

use serde::{Deserialize, Serialize};

use crate::model::SpeciesPair;

/// `M` equal cells on the unit torus. Cell `k` is centred at `x_k = k / M`,
/// so grid nodes and cell centres coincide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid1D {
    m: usize,
}

impl Grid1D {
    pub const MIN_CELLS: usize = 2;

    pub fn new(m: usize) -> Option<Self> {
        (m >= Self::MIN_CELLS).then_some(Grid1D { m })
    }

    pub fn cells(&self) -> usize {
        self.m
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn x(&self, k: usize) -> f64 {
        k as f64 / self.m as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.m).map(move |k| self.x(k))
    }

    #[inline]
    pub fn next(&self, k: usize) -> usize {
        if k + 1 == self.m {
            0
        } else {
            k + 1
        }
    }

    #[inline]
    pub fn prev(&self, k: usize) -> usize {
        if k == 0 {
            self.m - 1
        } else {
            k - 1
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityField {
    pub t: f64,
    pub rho1: Vec<f64>,
    pub rho2: Vec<f64>,
}

impl DensityField {
    pub fn new(t: f64, rho1: Vec<f64>, rho2: Vec<f64>) -> Self {
        assert_eq!(rho1.len(), rho2.len(), "species fields must share a grid");
        DensityField { t, rho1, rho2 }
    }

    pub fn constant(grid: Grid1D, value: SpeciesPair) -> Self {
        DensityField::new(0.0, vec![value.rho1; grid.cells()], vec![value.rho2; grid.cells()])
    }

    /// Sample two profiles at the grid points.
    pub fn from_fns(grid: Grid1D, f1: impl Fn(f64) -> f64, f2: impl Fn(f64) -> f64) -> Self {
        DensityField::new(0.0, grid.points().map(&f1).collect(), grid.points().map(&f2).collect())
    }

    pub fn grid(&self) -> Grid1D {
        Grid1D::new(self.rho1.len()).expect("field has at least two cells")
    }

    pub fn len(&self) -> usize {
        self.rho1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho1.is_empty()
    }

    #[inline]
    pub fn at(&self, k: usize) -> [f64; 2] {
        [self.rho1[k], self.rho2[k]]
    }

    pub fn species(&self, c: usize) -> &[f64] {
        if c == 0 {
            &self.rho1
        } else {
            &self.rho2
        }
    }

    /// `sum_k rho_c[k] dx` for each species.
    pub fn mass(&self) -> [f64; 2] {
        let dx = 1.0 / self.len() as f64;
        [self.rho1.iter().sum::<f64>() * dx, self.rho2.iter().sum::<f64>() * dx]
    }

    pub fn min_value(&self) -> f64 {
        self.rho1.iter().chain(&self.rho2).copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.rho1.iter().chain(&self.rho2).fold(0.0f64, |a, v| a.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.rho1.iter().chain(&self.rho2).all(|v| v.is_finite())
    }
}

/// Grid L1 distance `sum |a - b| dx`.
pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let dx = 1.0 / a.len() as f64;
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() * dx
}

/// Grid L2 distance `sqrt(sum (a - b)^2 dx)`.
pub fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let dx = 1.0 / a.len() as f64;
    (a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() * dx).sqrt()
}

pub fn max_distance(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Cosine coefficient of mode `k`: `2 sum_j v_j cos(2 pi k x_j) dx`.
pub fn cosine_amplitude(values: &[f64], mode: usize) -> f64 {
    let m = values.len();
    let dx = 1.0 / m as f64;
    let w = 2.0 * std::f64::consts::PI * mode as f64;
    2.0 * values
        .iter()
        .enumerate()
        .map(|(j, v)| v * (w * j as f64 * dx).cos())
        .sum::<f64>()
        * dx
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn grid_wraps() {
        let g = Grid1D::new(8).unwrap();
        assert_eq!(g.next(7), 0);
        assert_eq!(g.prev(0), 7);
        assert_eq!(g.x(4), 0.5);
        assert!(Grid1D::new(1).is_none());
    }

    #[test]
    fn mass_and_amplitude() {
        let g = Grid1D::new(64).unwrap();
        let f = DensityField::from_fns(g, |x| 0.5 + 0.1 * (2.0 * PI * x).cos(), |_| 0.25);
        let [m1, m2] = f.mass();
        assert!((m1 - 0.5).abs() < 1e-14 && (m2 - 0.25).abs() < 1e-14);
        assert!((cosine_amplitude(&f.rho1, 1) - 0.1).abs() < 1e-14);
        assert!(cosine_amplitude(&f.rho2, 1).abs() < 1e-14);
        assert_eq!(l1_distance(&f.rho1, &f.rho1), 0.0);
        assert!((l1_distance(&f.rho2, &vec![0.0; 64]) - 0.25).abs() < 1e-15);
    }
}
