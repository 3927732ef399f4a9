use twocomp_core::torus::min_image;
use twocomp_core::{ModelParams, Species};

use crate::ledger::LocalTimeLedger;
use crate::state::{z_values, ParticleState};

/// Accumulates `int rho_{i,c}^eps dt` per id, where
/// `rho_{i,c}^eps = (1/N) sum_{j in T_c, j != i} (2 eps)^-1 1{|x_j - x_i| <= eps}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplacementRecorder {
    epsilon: f64,
    integral: Vec<[f64; 2]>,
    lifted: Vec<f64>,
    ones: Vec<u32>,
}

impl ReplacementRecorder {
    pub fn new(n: usize, epsilon: f64) -> Self {
        assert!(epsilon > 0.0 && epsilon < 0.5, "epsilon must lie in (0, 1/2)");
        ReplacementRecorder { epsilon, integral: vec![[0.0; 2]; n], lifted: Vec::new(), ones: Vec::new() }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn integral(&self) -> &[[f64; 2]] {
        &self.integral
    }

    /// Local densities of every slot: `[rho_{k,1}, rho_{k,2}]`.
    pub fn local_densities(&mut self, state: &ParticleState) -> Vec<[f64; 2]> {
        let n = state.n();
        let pos = state.lifted();
        // two turns of the circle and a running count of type-1 slots
        self.lifted.clear();
        self.lifted.extend(pos.iter().copied());
        self.lifted.extend(pos.iter().map(|x| x + 1.0));
        self.ones.clear();
        self.ones.push(0);
        for i in 0..2 * n {
            let one = (state.types()[i % n] == Species::One) as u32;
            self.ones.push(self.ones[i] + one);
        }
        let x = &self.lifted;
        let count = |a: usize, b: usize| -> [u32; 2] {
            // slots a..b (half open) of the doubled array
            if b <= a {
                return [0, 0];
            }
            let c1 = self.ones[b] - self.ones[a];
            [c1, (b - a) as u32 - c1]
        };
        let w = 1.0 / (2.0 * self.epsilon * n as f64);
        let eps = self.epsilon;
        let mut out = vec![[0.0; 2]; n];
        let mut right = 1usize; // first index beyond the right window of slot k
        let mut left = 1usize; // first index inside the left window of slot k + n
        for (k, o) in out.iter_mut().enumerate() {
            right = right.max(k + 1);
            while right < k + n && x[right] - x[k] <= eps {
                right += 1;
            }
            left = left.max(right);
            while left < k + n && x[k + n] - x[left] > eps {
                left += 1;
            }
            let r = count(k + 1, right);
            let l = count(left, k + n);
            o[0] = (r[0] + l[0]) as f64 * w;
            o[1] = (r[1] + l[1]) as f64 * w;
        }
        out
    }

    /// Add `rho dt` for the current state.
    pub fn observe(&mut self, state: &ParticleState, dt: f64) {
        let dens = self.local_densities(state);
        for (k, d) in dens.iter().enumerate() {
            let acc = &mut self.integral[state.id(k) as usize];
            acc[0] += d[0] * dt;
            acc[1] += d[1] * dt;
        }
    }
}

/// `(1/N) sum_{i in T_c1} |A_{i,c2} - int rho_{i,c2}^eps dt|`.
pub fn replacement_statistic(
    ledger: &LocalTimeLedger,
    recorder: &ReplacementRecorder,
    id_types: &[Species],
    c1: Species,
    c2: Species,
) -> f64 {
    let n = id_types.len();
    let a = ledger.all_per_particle();
    let r = recorder.integral();
    let c = c2.index();
    (0..n)
        .filter(|&i| id_types[i] == c1)
        .map(|i| (a[i][c] - r[i][c]).abs())
        .sum::<f64>()
        / n as f64
}

/// Realized quadratic variation and net displacement of the `z` process,
/// sampled every `stride` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct QvRecorder {
    alpha: f64,
    params: ModelParams,
    stride: u64,
    count: u64,
    last: Vec<f64>,
    realized: Vec<f64>,
    net: Vec<f64>,
}

impl QvRecorder {
    pub fn new(state: &ParticleState, alpha: f64, params: ModelParams, stride: u64) -> Self {
        let z = z_values(state, alpha, &params);
        let n = state.n();
        QvRecorder { alpha, params, stride: stride.max(1), count: 0, last: z, realized: vec![0.0; n], net: vec![0.0; n] }
    }

    fn sample(&mut self, state: &ParticleState) {
        let z = z_values(state, self.alpha, &self.params);
        for (i, zi) in z.iter().enumerate() {
            // z lives on the torus; a sampling interval moves it far less than 1/2
            let d = min_image(zi - self.last[i]);
            self.realized[i] += d * d;
            self.net[i] += d;
        }
        self.last = z;
    }

    /// Call after every step.
    pub fn observe(&mut self, state: &ParticleState) {
        self.count += 1;
        if self.count.is_multiple_of(self.stride) {
            self.sample(state);
        }
    }

    /// Close a trailing partial sampling interval.
    pub fn finish(&mut self, state: &ParticleState) {
        if !self.count.is_multiple_of(self.stride) {
            self.sample(state);
            self.count = 0;
        }
    }

    /// Sum of squared increments of `z_k`, by id.
    pub fn realized(&self) -> &[f64] {
        &self.realized
    }

    /// `z_k(t) - z_k(0)`, by id.
    pub fn displacement(&self) -> &[f64] {
        &self.net
    }
}
