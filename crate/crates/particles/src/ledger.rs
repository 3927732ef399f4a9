use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};
use twocomp_core::model::switch_rate;
use twocomp_core::{ModelParams, Species};

use crate::state::ParticleState;

/// Local-time bookkeeping.
///
/// The clock of an adjacent pair is `A_ij + A_ji`, the contact occupation
/// density of the pair (the Skorokhod local time of the gap divided by the
/// gap diffusivity `s_i + s_j`). Pair entries live on slot pairs `(k, k+1)`;
/// per-particle aggregates are indexed by id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalTimeLedger {
    /// Clock accrued on each slot pair since its threshold was last reset.
    pub(crate) accrual: Vec<f64>,
    /// Integrated switching intensity since the last reset.
    pub(crate) hazard: Vec<f64>,
    pub(crate) threshold: Vec<f64>,
    /// `A_{i,c}`: (1/N) times the clock shared with partners of type `c`.
    pub(crate) per_particle: Vec<[f64; 2]>,
    /// `sum_{i != j} A_ij`.
    pub(crate) total: f64,
    /// Label swaps performed.
    pub(crate) switches: u64,
    /// Events between same-type particles that were not executed.
    pub(crate) skipped: u64,
}

impl LocalTimeLedger {
    pub fn new<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let pairs = if n > 1 { n } else { 0 };
        LocalTimeLedger {
            accrual: vec![0.0; pairs],
            hazard: vec![0.0; pairs],
            threshold: (0..pairs).map(|_| rng.sample(Exp1)).collect(),
            per_particle: vec![[0.0; 2]; n],
            total: 0.0,
            switches: 0,
            skipped: 0,
        }
    }

    pub fn pair_accrual(&self, k: usize) -> f64 {
        self.accrual[k]
    }

    /// `[A_{i,1}, A_{i,2}]` of particle `id`.
    pub fn per_particle(&self, id: u32) -> [f64; 2] {
        self.per_particle[id as usize]
    }

    pub fn all_per_particle(&self) -> &[[f64; 2]] {
        &self.per_particle
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn switches(&self) -> u64 {
        self.switches
    }

    pub fn skipped(&self) -> u64 {
        self.skipped
    }
}

/// Add `da` to the clock of slot pair `(k, k+1)` and fire its Poisson clock
/// of intensity `switch_rate * N` if the accumulated hazard passes the
/// pair's Exp(1) threshold. A firing swaps the ids and types of the two
/// slots (unless the types agree and `same_type` is off), resamples the
/// threshold and carries the overshoot. Returns whether labels were swapped.
#[allow(clippy::too_many_arguments)]
pub fn accrue_and_switch<R: Rng + ?Sized>(
    state: &mut ParticleState,
    ledger: &mut LocalTimeLedger,
    k: usize,
    da: f64,
    p: &ModelParams,
    same_type: bool,
    rng: &mut R,
) -> bool {
    debug_assert!(da >= 0.0);
    let n = state.n();
    if n < 2 || da == 0.0 {
        return false;
    }
    let j = (k + 1) % n;
    let (ci, cj) = (state.types[k], state.types[j]);
    let (id_i, id_j) = (state.ids[k] as usize, state.ids[j] as usize);
    let inv_n = 1.0 / n as f64;
    ledger.per_particle[id_i][cj.index()] += da * inv_n;
    ledger.per_particle[id_j][ci.index()] += da * inv_n;
    ledger.total += 2.0 * da;
    ledger.accrual[k] += da;
    ledger.hazard[k] += switch_rate(ci, cj, p) * n as f64 * da;
    if ledger.hazard[k] < ledger.threshold[k] {
        return false;
    }
    ledger.hazard[k] -= ledger.threshold[k];
    ledger.threshold[k] = rng.sample(Exp1);
    ledger.accrual[k] = 0.0;
    if ci == cj && !same_type {
        ledger.skipped += 1;
        return false;
    }
    state.ids.swap(k, j);
    state.types.swap(k, j);
    ledger.switches += 1;
    true
}

/// Leading term of the quadratic variation of `z_k`:
/// `lambda alpha^2 s_k [lambda t + A_{k,1}/sigma1^2 + A_{k,2}/sigma2^2]`.
pub fn qv_predicted(ledger: &LocalTimeLedger, id: u32, species: Species, t: f64, p: &ModelParams, alpha: f64) -> f64 {
    let a = ledger.per_particle(id);
    p.lambda * alpha * alpha * p.sigma_sq(species) * (p.lambda * t + a[0] / p.sigma1_sq + a[1] / p.sigma2_sq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pair_state() -> ParticleState {
        ParticleState::from_positions(&[0.2, 0.6], &[Species::One, Species::Two]).unwrap()
    }

    #[test]
    fn zero_lambda_never_switches() {
        let p = ModelParams::new(1.0, 1.0, 0.0, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut s = pair_state();
        let mut l = LocalTimeLedger::new(2, &mut rng);
        for _ in 0..1000 {
            assert!(!accrue_and_switch(&mut s, &mut l, 0, 10.0, &p, true, &mut rng));
        }
        assert_eq!(l.switches(), 0);
        assert!((l.per_particle(0)[1] - 5000.0).abs() < 1e-9);
    }

    #[test]
    fn swap_preserves_type_counts() {
        let p = ModelParams::new(1.0, 1.0, 1.0, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut s = pair_state();
        let mut l = LocalTimeLedger::new(2, &mut rng);
        let mut fired = 0;
        for _ in 0..100 {
            if accrue_and_switch(&mut s, &mut l, 0, 1.0, &p, true, &mut rng) {
                fired += 1;
            }
            assert_eq!(s.type_counts(), [1, 1]);
        }
        assert!(fired > 0);
        // types travel with ids
        for k in 0..2 {
            assert_eq!(s.species(k), s.id_type(s.id(k)));
        }
    }

    #[test]
    fn same_type_swaps_can_be_disabled() {
        let p = ModelParams::new(1.0, 1.0, 1.0, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut s = ParticleState::from_positions(&[0.2, 0.6], &[Species::One, Species::One]).unwrap();
        let mut l = LocalTimeLedger::new(2, &mut rng);
        for _ in 0..100 {
            assert!(!accrue_and_switch(&mut s, &mut l, 0, 1.0, &p, false, &mut rng));
        }
        assert!(l.skipped() > 0);
        assert_eq!(s.ids(), &[0, 1]);
    }

    #[test]
    fn switch_probability_for_unit_hazard() {
        let p = ModelParams::new(1.0, 1.0, 1.0, 100).unwrap();
        let s0 = ParticleState::from_positions(&(0..100).map(|i| i as f64 / 100.0).collect::<Vec<_>>(), &[Species::One; 100])
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let reps = 100_000;
        let mut hits = 0;
        for _ in 0..reps {
            let mut s = s0.clone();
            let mut l = LocalTimeLedger::new(100, &mut rng);
            if accrue_and_switch(&mut s, &mut l, 0, 0.01, &p, true, &mut rng) {
                hits += 1;
            }
        }
        let q = 1.0 - (-1.0f64).exp();
        let frac = hits as f64 / reps as f64;
        let se = (q * (1.0 - q) / reps as f64).sqrt();
        assert!((frac - q).abs() < 3.0 * se, "{frac}");
    }

    #[test]
    fn qv_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let l = LocalTimeLedger::new(1, &mut rng);
        let p = ModelParams::new(1.0, 1.0, 1.0, 1).unwrap();
        assert!((qv_predicted(&l, 0, Species::One, 1.0, &p, 0.5) - 0.25).abs() < 1e-15);
        let p0 = ModelParams::new(1.0, 1.0, 0.0, 1).unwrap();
        assert_eq!(qv_predicted(&l, 0, Species::One, 1.0, &p0, 0.5), 0.0);
    }
}
