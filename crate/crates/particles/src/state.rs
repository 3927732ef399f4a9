use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use twocomp_core::torus::{min_image, wrap};
use twocomp_core::{DensityField, Grid1D, ModelParams, Species};

use crate::error::SimError;

/// Smallest gap kept between neighbours after every operation.
pub const MIN_GAP: f64 = 8.0 * f64::EPSILON;

/// Cells of the grid used to tabulate the inverse CDF in [`init_iid`].
pub const INIT_GRID: usize = 1 << 14;

/// Particles in cyclic order.
///
/// `pos` is a lift of the torus positions with `pos[0] <= pos[1] <= ... <=
/// pos[N-1] <= pos[0] + 1` and `pos[0]` in `[0, 1)`, so every gap, including
/// the wrap-around gap `pos[0] + 1 - pos[N-1]`, is a plain difference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleState {
    pub(crate) pos: Vec<f64>,
    pub(crate) ids: Vec<u32>,
    pub(crate) types: Vec<Species>,
    /// Type of each id; never changes.
    pub(crate) id_types: Vec<Species>,
    pub time: f64,
}

impl ParticleState {
    /// Build a state from torus positions and types; particle `i` of the
    /// input gets id `i`. Coincident positions are separated by [`MIN_GAP`].
    pub fn from_positions(positions: &[f64], types: &[Species]) -> Result<Self, SimError> {
        if positions.is_empty() || positions.len() != types.len() {
            return Err(SimError::Config("need one type per position and at least one particle".into()));
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(SimError::Config("positions must be finite".into()));
        }
        let mut order: Vec<(f64, u32)> = positions.iter().enumerate().map(|(i, &x)| (wrap(x), i as u32)).collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut pos: Vec<f64> = order.iter().map(|o| o.0).collect();
        for k in 1..pos.len() {
            if pos[k] < pos[k - 1] + MIN_GAP {
                pos[k] = pos[k - 1] + MIN_GAP;
            }
        }
        let n = pos.len();
        if n > 1 && pos[0] + 1.0 - pos[n - 1] < MIN_GAP {
            return Err(SimError::Config("particles too crowded to separate".into()));
        }
        let ids: Vec<u32> = order.iter().map(|o| o.1).collect();
        Ok(ParticleState {
            types: ids.iter().map(|&i| types[i as usize]).collect(),
            id_types: types.to_vec(),
            pos,
            ids,
            time: 0.0,
        })
    }

    pub fn n(&self) -> usize {
        self.pos.len()
    }

    /// Torus position of slot `k`.
    pub fn position(&self, k: usize) -> f64 {
        wrap(self.pos[k])
    }

    /// Torus positions in slot order.
    pub fn positions(&self) -> Vec<f64> {
        self.pos.iter().map(|&x| wrap(x)).collect()
    }

    pub fn lifted(&self) -> &[f64] {
        &self.pos
    }

    pub fn id(&self, k: usize) -> u32 {
        self.ids[k]
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn species(&self, k: usize) -> Species {
        self.types[k]
    }

    pub fn types(&self) -> &[Species] {
        &self.types
    }

    pub fn id_type(&self, id: u32) -> Species {
        self.id_types[id as usize]
    }

    pub fn id_types(&self) -> &[Species] {
        &self.id_types
    }

    /// Slot currently holding each id.
    pub fn slots_by_id(&self) -> Vec<usize> {
        let mut s = vec![0; self.n()];
        for (k, &id) in self.ids.iter().enumerate() {
            s[id as usize] = k;
        }
        s
    }

    /// `(|T_1|, |T_2|)`.
    pub fn type_counts(&self) -> [usize; 2] {
        let n1 = self.types.iter().filter(|&&c| c == Species::One).count();
        [n1, self.n() - n1]
    }

    /// Gap between slot `k` and its right neighbour.
    #[inline]
    pub fn gap(&self, k: usize) -> f64 {
        let n = self.n();
        if k + 1 < n {
            self.pos[k + 1] - self.pos[k]
        } else {
            self.pos[0] + 1.0 - self.pos[n - 1]
        }
    }

    /// Whether all gaps are strictly positive.
    pub fn is_ordered(&self) -> bool {
        self.n() == 1 || (0..self.n()).all(|k| self.gap(k) > 0.0)
    }

    /// Cyclic order of ids starting from the smallest id, used to compare
    /// orders up to rotation.
    pub fn cyclic_id_order(&self) -> Vec<u32> {
        let n = self.n();
        let start = self.ids.iter().position(|&i| i == 0).unwrap_or(0);
        (0..n).map(|j| self.ids[(start + j) % n]).collect()
    }

    /// Keep `pos[0]` in `[0, 1)` by shifting the whole lift by an integer.
    pub(crate) fn renormalize(&mut self) {
        let shift = self.pos[0].floor();
        if shift != 0.0 {
            for x in &mut self.pos {
                *x -= shift;
            }
        }
    }
}

fn tabulate(f: &dyn Fn(f64) -> f64, name: &str) -> Result<(Vec<f64>, f64), SimError> {
    let h = 1.0 / INIT_GRID as f64;
    let mut cdf = Vec::with_capacity(INIT_GRID + 1);
    cdf.push(0.0);
    let mut acc = 0.0;
    for k in 0..INIT_GRID {
        let v = f((k as f64 + 0.5) * h);
        if !v.is_finite() || v < 0.0 {
            return Err(SimError::InvalidDensity(format!("{name} is {v} at x = {}", (k as f64 + 0.5) * h)));
        }
        acc += v * h;
        cdf.push(acc);
    }
    Ok((cdf, acc))
}

fn inverse_cdf(cdf: &[f64], u: f64) -> f64 {
    let total = cdf[cdf.len() - 1];
    let target = u * total;
    // first index with cdf[idx] >= target
    let idx = cdf.partition_point(|&c| c < target).clamp(1, cdf.len() - 1);
    let (lo, hi) = (cdf[idx - 1], cdf[idx]);
    let frac = if hi > lo { (target - lo) / (hi - lo) } else { 0.5 };
    let h = 1.0 / (cdf.len() - 1) as f64;
    wrap(((idx - 1) as f64 + frac) * h)
}

/// Independent draws from the normalized profiles. Type 1 gets
/// `round(N m1 / (m1 + m2))` particles, where `m_c` is the mass of profile
/// `c`. Ids `0..N1` are type 1, the rest type 2.
pub fn init_iid(
    rho1: &dyn Fn(f64) -> f64,
    rho2: &dyn Fn(f64) -> f64,
    n: usize,
    seed: u64,
) -> Result<ParticleState, SimError> {
    if n == 0 {
        return Err(SimError::Config("N must be at least 1".into()));
    }
    let (cdf1, m1) = tabulate(rho1, "rho1")?;
    let (cdf2, m2) = tabulate(rho2, "rho2")?;
    if !(m1 + m2 > 0.0) {
        return Err(SimError::InvalidDensity("both profiles vanish".into()));
    }
    let n1 = (n as f64 * m1 / (m1 + m2)).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions = Vec::with_capacity(n);
    let mut types = Vec::with_capacity(n);
    for i in 0..n {
        let (cdf, c) = if i < n1 { (&cdf1, Species::One) } else { (&cdf2, Species::Two) };
        positions.push(inverse_cdf(cdf, rng.random::<f64>()));
        types.push(c);
    }
    ParticleState::from_positions(&positions, &types)
}

/// Box-kernel density estimate at the grid points `x_m = m/M`:
/// `(1/N) sum_{j in T_c} (2 eps)^-1 1{|x_j - x_m| <= eps}`.
pub fn empirical_density(state: &ParticleState, epsilon: f64, m: usize) -> DensityField {
    assert!(epsilon > 0.0 && epsilon < 0.5, "epsilon must lie in (0, 1/2)");
    let grid = Grid1D::new(m).expect("at least two grid points");
    let mut out = [vec![0.0; m], vec![0.0; m]];
    let w = 1.0 / (2.0 * epsilon * state.n() as f64);
    let mf = m as f64;
    for k in 0..state.n() {
        let x = state.position(k);
        let c = state.types[k].index();
        // candidate indices, padded by one against rounding; the exact
        // distance test decides
        let lo = ((x - epsilon) * mf).floor() as i64 - 1;
        let hi = ((x + epsilon) * mf).ceil() as i64 + 1;
        let range: Box<dyn Iterator<Item = i64>> =
            if hi - lo + 1 >= m as i64 { Box::new(0..m as i64) } else { Box::new(lo..=hi) };
        for j in range {
            let g = j.rem_euclid(m as i64) as usize;
            if min_image(grid.x(g) - x).abs() <= epsilon {
                out[c][g] += w;
            }
        }
    }
    let [r1, r2] = out;
    DensityField::new(state.time, r1, r2)
}

/// `z_k = x_k + (alpha/N) sum_i nu(x_i - x_k) / sigma_{c(i)}^2`, indexed by
/// id. Linear time via prefix sums over the lift.
pub fn z_values(state: &ParticleState, alpha: f64, p: &ModelParams) -> Vec<f64> {
    let n = state.n();
    let w: Vec<f64> = state.types.iter().map(|&c| 1.0 / p.sigma_sq(c)).collect();
    let total_w: f64 = w.iter().sum();
    let total_wx: f64 = w.iter().zip(&state.pos).map(|(a, x)| a * x).sum();
    let mut z = vec![0.0; n];
    let mut prefix_w = 0.0;
    for k in 0..n {
        let xk = state.pos[k];
        // slots s < k lie a full turn ahead: nu = x_s + 1 - x_k
        let s = total_wx - w[k] * xk - xk * (total_w - w[k]) + prefix_w;
        z[state.ids[k] as usize] = wrap(xk) + alpha / n as f64 * s;
        prefix_w += w[k];
    }
    z
}
