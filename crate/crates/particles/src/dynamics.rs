use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use twocomp_core::torus::wrap;
use twocomp_core::ModelParams;

use crate::error::SimError;
use crate::ledger::{accrue_and_switch, LocalTimeLedger};
use crate::state::{ParticleState, MIN_GAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LocalTimeScheme {
    /// Local time of each contact sampled from the Brownian-bridge minimum of
    /// the gap over the step.
    #[default]
    SkorokhodExact,
    /// Occupation estimate `dt 1{gap <= w} / (2w)` of the pair clock.
    MollifiedOccupation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub dt: f64,
    pub t_final: f64,
    pub seed: u64,
    /// Half-width of the box kernel used by density estimates.
    pub epsilon: f64,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default)]
    pub local_time_scheme: LocalTimeScheme,
    /// Execute clock events between particles of the same type as id swaps.
    #[serde(default = "yes")]
    pub same_type_switching: bool,
    /// Window `w` of the occupation scheme; defaults to
    /// `2 sqrt(2 max(sigma^2) dt)`.
    #[serde(default)]
    pub occupation_width: Option<f64>,
}

fn yes() -> bool {
    true
}

impl SimConfig {
    /// `0.1 (1/N)^2 / max(sigma1^2, sigma2^2)`.
    pub fn default_dt(p: &ModelParams) -> f64 {
        let n = p.n as f64;
        0.1 / (n * n) / p.sigma1_sq.max(p.sigma2_sq)
    }

    /// Default configuration: `dt` from [`SimConfig::default_dt`] and
    /// `epsilon = N^(-1/3)`.
    pub fn new(p: &ModelParams, t_final: f64, seed: u64) -> Self {
        SimConfig {
            dt: Self::default_dt(p),
            t_final,
            seed,
            epsilon: (p.n as f64).powf(-1.0 / 3.0).min(0.49),
            snapshot_times: Vec::new(),
            local_time_scheme: LocalTimeScheme::SkorokhodExact,
            same_type_switching: true,
            occupation_width: None,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SimError::Config(format!("dt = {} must be > 0", self.dt)));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(SimError::Config(format!("t_final = {} must be >= 0", self.t_final)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(SimError::Config(format!("epsilon = {} must lie in (0, 1/2)", self.epsilon)));
        }
        if let Some(w) = self.occupation_width {
            if !(w > 0.0 && w < 0.5) {
                return Err(SimError::Config(format!("occupation_width = {w} must lie in (0, 1/2)")));
            }
        }
        for &t in &self.snapshot_times {
            if !(t >= 0.0 && t <= self.t_final) {
                return Err(SimError::Config(format!("snapshot time {t} outside [0, {}]", self.t_final)));
            }
        }
        Ok(())
    }

    /// A warning when `dt > (1/N)^2 / min(sigma^2)`, where neighbour gaps are
    /// no longer resolved.
    pub fn coarse_dt_warning(&self, p: &ModelParams) -> Option<String> {
        let n = p.n as f64;
        let bound = 1.0 / (n * n) / p.sigma1_sq.min(p.sigma2_sq);
        (self.dt > bound).then(|| format!("dt = {} exceeds the gap-resolving scale {bound}", self.dt))
    }

    fn occupation_window(&self, p: &ModelParams) -> f64 {
        self.occupation_width
            .unwrap_or_else(|| 2.0 * (2.0 * p.sigma1_sq.max(p.sigma2_sq) * self.dt).sqrt())
    }
}

/// Skorokhod local time accumulated by a gap with diffusivity `v` that
/// starts at `g0 >= 0` and whose free path ends at `g1`, given an Exp(1)
/// variate `e` for the minimum of the Brownian bridge between them:
///
/// `min = (g0 + g1 - sqrt((g1 - g0)^2 + 2 v dt e)) / 2`, `L = max(0, -min)`.
#[inline]
pub fn reflect_gap(g0: f64, g1: f64, v: f64, dt: f64, e: f64) -> f64 {
    let d = g1 - g0;
    let m = 0.5 * (g0 + g1 - (d * d + 2.0 * v * dt * e).sqrt());
    (-m).max(0.0)
}

/// Positions `(x_i, x_j)` with `x_j - x_i = u` and `x_i/s_i + x_j/s_j = w`.
pub fn positions_from_uw(u: f64, w: f64, s_i: f64, s_j: f64) -> (f64, f64) {
    let x_i = (w - u / s_j) * s_i * s_j / (s_i + s_j);
    (x_i, x_i + u)
}

/// One step of an isolated pair, `x_j` ahead of `x_i`, with the free
/// increments `xi` and bridge variate `e` supplied. The gap
/// `u = x_j - x_i` (diffusivity `s_i + s_j`) is reflected at 0 while
/// `w = x_i/s_i + x_j/s_j` moves freely; the two are independent, so the
/// step is exact. Returns the new positions and the local time of `u` at 0.
#[allow(clippy::too_many_arguments)]
pub fn reflect_pair_with(x_i: f64, x_j: f64, s_i: f64, s_j: f64, dt: f64, xi: [f64; 2], e: f64) -> (f64, f64, f64) {
    let g0 = wrap(x_j - x_i);
    let g1 = g0 + xi[1] - xi[0];
    let l = reflect_gap(g0, g1, s_i + s_j, dt, e);
    if l == 0.0 {
        return (wrap(x_i + xi[0]), wrap(x_j + xi[1]), 0.0);
    }
    let w = (x_i + xi[0]) / s_i + (x_i + g0 + xi[1]) / s_j;
    let (a, b) = positions_from_uw(g1 + l, w, s_i, s_j);
    (wrap(a), wrap(b), l)
}

/// [`reflect_pair_with`] with freshly sampled increments.
pub fn reflect_pair<R: Rng + ?Sized>(x_i: f64, x_j: f64, s_i: f64, s_j: f64, dt: f64, rng: &mut R) -> (f64, f64, f64) {
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    let e: f64 = rng.sample(Exp1);
    reflect_pair_with(x_i, x_j, s_i, s_j, dt, [(s_i * dt).sqrt() * a, (s_j * dt).sqrt() * b], e)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepReport {
    pub dt: f64,
    /// Pairs that touched during the step.
    pub contacts: u32,
    /// Sum of the Skorokhod local times of all gaps.
    pub local_time: f64,
    /// Label swaps.
    pub switches: u32,
    /// Whether the order had to be restored by a projection (0 or 1).
    pub sweeps: u32,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct Workspace {
    g0: Vec<f64>,
    l: Vec<f64>,
    v: Vec<f64>,
    s: Vec<f64>,
    blocks: Vec<(f64, f64, usize)>,
}

#[inline]
fn push(state: &mut ParticleState, k: usize, j: usize, l: f64, si: f64, sj: f64) {
    let v = si + sj;
    state.pos[k] -= l * si / v;
    state.pos[j] += l * sj / v;
}

/// Restore every gap to at least `2 MIN_GAP` by the closest configuration in
/// the metric `sum dx_i^2 / s_i` (weighted isotonic regression of
/// `x_t - t delta`, solved by pooling adjacent violators). The circle is cut
/// at the largest gap. Each pair's clock grows by the weighted push it
/// transmits, `-sum_{m <= k} dx_m / s_m` within a pooled block.
fn project_ordered(state: &mut ParticleState, ws: &mut Workspace) {
    let n = state.n();
    let delta = 2.0 * MIN_GAP;
    let cut = (0..n).max_by(|&a, &b| state.gap(a).total_cmp(&state.gap(b))).unwrap_or(0);
    let start = (cut + 1) % n;
    let slot = |t: usize| (start + t) % n;
    let lift = |k: usize| if k < start { 1.0 } else { 0.0 };
    ws.blocks.clear();
    for t in 0..n {
        let k = slot(t);
        let w = 1.0 / ws.s[k];
        let z = state.pos[k] + lift(k) - t as f64 * delta;
        let mut block = (w * z, w, 1usize);
        while let Some(&(pz, pw, pl)) = ws.blocks.last() {
            if pz / pw > block.0 / block.1 {
                ws.blocks.pop();
                block = (block.0 + pz, block.1 + pw, block.2 + pl);
            } else {
                break;
            }
        }
        ws.blocks.push(block);
    }
    let mut t = 0;
    for bi in 0..ws.blocks.len() {
        let (bz, bw, len) = ws.blocks[bi];
        let mean = bz / bw;
        let mut clock = 0.0;
        for i in 0..len {
            let k = slot(t + i);
            let y = mean + (t + i) as f64 * delta;
            let x = state.pos[k] + lift(k);
            clock -= (y - x) / ws.s[k];
            state.pos[k] = y - lift(k);
            if i + 1 < len {
                ws.l[k] += clock.max(0.0) * ws.v[k];
            }
        }
        t += len;
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn advance_with<R: Rng + ?Sized>(
    state: &mut ParticleState,
    ledger: &mut LocalTimeLedger,
    cfg: &SimConfig,
    p: &ModelParams,
    dt: f64,
    step: u64,
    ws: &mut Workspace,
    rng: &mut R,
) -> Result<StepReport, SimError> {
    let n = state.n();
    let mut report = StepReport { dt, ..Default::default() };
    ws.s.clear();
    ws.s.extend(state.types.iter().map(|&c| p.sigma_sq(c)));
    if n > 1 {
        ws.g0.clear();
        ws.g0.extend((0..n).map(|k| state.gap(k)));
    }
    for k in 0..n {
        let z: f64 = rng.sample(StandardNormal);
        state.pos[k] += (ws.s[k] * dt).sqrt() * z;
    }
    if n > 1 {
        ws.l.clear();
        ws.l.resize(n, 0.0);
        ws.v.clear();
        ws.v.extend((0..n).map(|k| ws.s[k] + ws.s[(k + 1) % n]));
        for k in 0..n {
            let j = (k + 1) % n;
            let e: f64 = rng.sample(Exp1);
            let l = reflect_gap(ws.g0[k].max(0.0), state.gap(k), ws.v[k], dt, e);
            if l > 0.0 {
                push(state, k, j, l, ws.s[k], ws.s[j]);
                ws.l[k] = l;
            }
        }
        if (0..n).any(|k| state.gap(k) < MIN_GAP) {
            project_ordered(state, ws);
            report.sweeps = 1;
            if (0..n).any(|k| state.gap(k) < MIN_GAP) {
                return Err(SimError::SweepFailed { step, t: state.time });
            }
        }

        let width = cfg.occupation_window(p);
        for k in 0..n {
            let l = ws.l[k];
            if l > 0.0 {
                report.contacts += 1;
                report.local_time += l;
            }
            let da = match cfg.local_time_scheme {
                LocalTimeScheme::SkorokhodExact => l / ws.v[k],
                LocalTimeScheme::MollifiedOccupation => {
                    if state.gap(k) <= width {
                        dt / (2.0 * width)
                    } else {
                        0.0
                    }
                }
            };
            if accrue_and_switch(state, ledger, k, da, p, cfg.same_type_switching, rng) {
                report.switches += 1;
            }
        }
    }
    state.time += dt;
    state.renormalize();
    Ok(report)
}

/// One step of size `cfg.dt`: free Gaussian moves, pairwise reflection in a
/// cyclic sweep (a projection restores any order left broken), clock accrual and
/// label switching per pair, then the clock advances.
pub fn advance<R: Rng + ?Sized>(
    state: &mut ParticleState,
    ledger: &mut LocalTimeLedger,
    cfg: &SimConfig,
    p: &ModelParams,
    rng: &mut R,
) -> Result<StepReport, SimError> {
    let mut ws = Workspace::default();
    advance_with(state, ledger, cfg, p, cfg.dt, 0, &mut ws, rng)
}

/// State delivered to snapshot callbacks.
#[derive(Debug, Clone, Copy)]
pub struct Snapshot<'a> {
    pub t: f64,
    pub state: &'a ParticleState,
    pub ledger: &'a LocalTimeLedger,
}

/// A single trajectory with its own random stream.
///
/// The stream is ChaCha8 seeded with `cfg.seed` on stream 1 (stream 0 is
/// left to initial conditions), so a run is a deterministic function of the
/// initial state and the configuration.
#[derive(Debug, Clone)]
pub struct Simulator {
    state: ParticleState,
    ledger: LocalTimeLedger,
    cfg: SimConfig,
    params: ModelParams,
    rng: ChaCha8Rng,
    steps: u64,
    ws: Workspace,
}

impl Simulator {
    pub fn new(state: ParticleState, cfg: SimConfig, params: ModelParams) -> Result<Self, SimError> {
        cfg.validate()?;
        params.validate()?;
        if params.n != state.n() {
            return Err(SimError::Config(format!(
                "model has N = {} but the state holds {} particles",
                params.n,
                state.n()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(1);
        let ledger = LocalTimeLedger::new(state.n(), &mut rng);
        Ok(Simulator { state, ledger, cfg, params, rng, steps: 0, ws: Workspace::default() })
    }

    pub fn state(&self) -> &ParticleState {
        &self.state
    }

    pub fn ledger(&self) -> &LocalTimeLedger {
        &self.ledger
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn time(&self) -> f64 {
        self.state.time
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn into_parts(self) -> (ParticleState, LocalTimeLedger) {
        (self.state, self.ledger)
    }

    pub fn step(&mut self) -> Result<StepReport, SimError> {
        self.step_by(self.cfg.dt)
    }

    pub fn step_by(&mut self, dt: f64) -> Result<StepReport, SimError> {
        let r = advance_with(
            &mut self.state,
            &mut self.ledger,
            &self.cfg,
            &self.params,
            dt,
            self.steps,
            &mut self.ws,
            &mut self.rng,
        )?;
        self.steps += 1;
        Ok(r)
    }

    /// Step until `target`, shortening the last step to land on it exactly.
    pub fn run_until(
        &mut self,
        target: f64,
        observer: &mut dyn FnMut(&ParticleState, &LocalTimeLedger, &StepReport),
    ) -> Result<(), SimError> {
        while self.state.time < target {
            let rest = target - self.state.time;
            let dt = if rest <= self.cfg.dt * (1.0 + 1e-9) { rest } else { self.cfg.dt };
            let report = self.step_by(dt)?;
            if dt == rest {
                self.state.time = target;
            }
            observer(&self.state, &self.ledger, &report);
        }
        Ok(())
    }

    /// Run to `t_final`, calling `on_snapshot` at each configured snapshot
    /// time (including 0 when listed) and `observer` after every step.
    pub fn run(
        &mut self,
        observer: &mut dyn FnMut(&ParticleState, &LocalTimeLedger, &StepReport),
        on_snapshot: &mut dyn FnMut(Snapshot<'_>),
    ) -> Result<(), SimError> {
        let mut times = self.cfg.snapshot_times.clone();
        times.sort_by(f64::total_cmp);
        times.dedup();
        for t in times {
            if t < self.state.time {
                continue;
            }
            self.run_until(t, observer)?;
            on_snapshot(Snapshot { t, state: &self.state, ledger: &self.ledger });
        }
        let t_final = self.cfg.t_final;
        self.run_until(t_final, observer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use twocomp_core::Species;

    #[test]
    fn no_contact_leaves_pair_untouched() {
        let (a, b, l) = reflect_pair_with(0.1, 0.6, 1.0, 1.0, 1e-4, [0.0, 0.0], 1.0);
        assert_eq!((a, b, l), (0.1, 0.6, 0.0));
    }

    #[test]
    fn reflection_solves_the_linear_system() {
        let (a, b) = positions_from_uw(0.02, 1.0, 1.0, 1.0);
        assert!((a - 0.49).abs() < 1e-15 && (b - 0.51).abs() < 1e-15);
        // a free step ending below zero is reflected to g1 + L with w kept
        let (a, b, l) = reflect_pair_with(0.5, 0.5, 1.0, 3.0, 1e-12, [0.0, -0.04], 0.0);
        assert!((l - 0.04).abs() < 1e-15);
        assert!((b - a).abs() < 1e-14);
        assert!((a / 1.0 + b / 3.0 - (0.5 + 0.46 / 3.0)).abs() < 1e-14);
    }

    #[test]
    fn bridge_minimum_formula() {
        // e = 0 gives min(g0, g1)
        assert!((reflect_gap(0.3, -0.1, 2.0, 0.01, 0.0) - 0.1).abs() < 1e-15);
        assert_eq!(reflect_gap(0.3, 0.2, 2.0, 0.01, 0.0), 0.0);
        // contact iff e v dt / 2 > g0 g1
        assert_eq!(reflect_gap(0.1, 0.1, 2.0, 0.01, 0.99), 0.0);
        assert!(reflect_gap(0.1, 0.1, 2.0, 0.01, 1.01) > 0.0);
    }

    #[test]
    fn projection_resolves_jams() {
        let p = ModelParams::new(1.0, 2.0, 1.0, 5).unwrap();
        let mut s = ParticleState::from_positions(&[0.1, 0.2, 0.3, 0.4, 0.9], &[Species::One, Species::Two, Species::One, Species::Two, Species::One])
            .unwrap();
        // three particles jammed in reverse order
        s.pos = vec![0.1, 0.3, 0.29, 0.28, 0.9];
        let before: f64 = s.pos.iter().zip(s.types()).map(|(x, c)| x / p.sigma_sq(*c)).sum();
        let mut ws = Workspace::default();
        ws.s = s.types().iter().map(|&c| p.sigma_sq(c)).collect();
        ws.v = (0..5).map(|k| ws.s[k] + ws.s[(k + 1) % 5]).collect();
        ws.l = vec![0.0; 5];
        project_ordered(&mut s, &mut ws);
        assert!(s.is_ordered() && (0..5).all(|k| s.gap(k) >= MIN_GAP));
        let after: f64 = s.pos.iter().zip(s.types()).map(|(x, c)| x / p.sigma_sq(*c)).sum();
        assert!((before - after).abs() < 1e-14);
        assert!(ws.l[1] > 0.0 && ws.l[2] > 0.0);
        assert_eq!((ws.l[0], ws.l[3], ws.l[4]), (0.0, 0.0, 0.0));
        // pushes transmitted through the pair clocks reproduce the moves
        let dx1 = s.pos[1] - 0.3;
        assert!((dx1 + ws.l[1] / ws.v[1] * ws.s[1]).abs() < 1e-14);
    }

    #[test]
    fn default_dt_and_epsilon() {
        let p = ModelParams::new(1.0, 2.0, 1.0, 100).unwrap();
        let c = SimConfig::new(&p, 1.0, 0);
        assert!((c.dt - 0.1 / 10_000.0 / 2.0).abs() < 1e-20);
        assert!((c.epsilon - 100f64.powf(-1.0 / 3.0)).abs() < 1e-15);
        assert!(c.coarse_dt_warning(&p).is_none());
        let coarse = SimConfig { dt: 1e-3, ..c };
        assert!(coarse.coarse_dt_warning(&p).is_some());
    }

    #[test]
    fn step_keeps_order_and_counts() {
        let p = ModelParams::new(1.0, 2.0, 5.0, 64).unwrap();
        let pos: Vec<f64> = (0..64).map(|i| i as f64 / 64.0).collect();
        let types: Vec<Species> = (0..64).map(|i| Species::from_index(i % 2)).collect();
        let s = ParticleState::from_positions(&pos, &types).unwrap();
        let mut sim = Simulator::new(s, SimConfig::new(&p, 0.01, 9), p).unwrap();
        let mut last_total = 0.0;
        sim.run(
            &mut |st, l, _| {
                assert!(st.is_ordered());
                assert_eq!(st.type_counts(), [32, 32]);
                assert!(l.total() >= last_total);
                last_total = l.total();
            },
            &mut |_| {},
        )
        .unwrap();
        assert!(sim.ledger().switches() > 0);
        assert_eq!(sim.time(), 0.01);
    }

    #[test]
    fn too_large_dt_fails_loudly_or_keeps_order() {
        let p = ModelParams::new(1.0, 1.0, 1.0, 200).unwrap();
        let pos: Vec<f64> = (0..200).map(|i| i as f64 / 200.0).collect();
        let s = ParticleState::from_positions(&pos, &[Species::One; 200]).unwrap();
        let cfg = SimConfig { dt: 0.05, ..SimConfig::new(&p, 0.5, 1) };
        let mut sim = Simulator::new(s, cfg, p).unwrap();
        match sim.run(&mut |_, _, _| {}, &mut |_| {}) {
            Ok(()) => assert!(sim.state().is_ordered()),
            Err(e) => assert!(matches!(e, SimError::SweepFailed { .. })),
        }
    }

    #[test]
    fn snapshots_at_requested_times() {
        let p = ModelParams::new(1.0, 1.0, 1.0, 4).unwrap();
        let s = ParticleState::from_positions(&[0.1, 0.3, 0.6, 0.8], &[Species::One; 4]).unwrap();
        let cfg = SimConfig { snapshot_times: vec![0.0, 0.0015, 0.01], ..SimConfig::new(&p, 0.01, 3) };
        let mut sim = Simulator::new(s, cfg, p).unwrap();
        let mut seen = Vec::new();
        sim.run(&mut |_, _, _| {}, &mut |snap| seen.push((snap.t, snap.state.time))).unwrap();
        assert_eq!(seen, vec![(0.0, 0.0), (0.0015, 0.0015), (0.01, 0.01)]);
    }
}
