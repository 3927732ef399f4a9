//! Martingale, quadratic variation and replacement diagnostics.

mod common;

use twocomp_core::model::{alpha_const, switch_rate};
use twocomp_core::torus::min_image;
use twocomp_core::{ModelParams, Species};
use twocomp_particles::{
    init_iid, qv_predicted, replacement_statistic, z_values, QvRecorder, ReplacementRecorder, SimConfig, Simulator,
};

#[test]
fn z_is_a_martingale_with_predicted_variation() {
    let n = 64;
    let p = ModelParams::new(1.0, 2.0, 1.0, n).unwrap();
    let alpha = alpha_const(&p, 0.5, 0.5).unwrap();
    let t = 0.01;
    let reps = 60u64;
    let mut realized = vec![0.0; n];
    let mut predicted = vec![0.0; n];
    let mut disp = vec![Vec::new(); n];
    for r in 0..reps {
        let s = init_iid(&|_| 0.5, &|_| 0.5, n, 500 + r).unwrap();
        let mut cfg = SimConfig::new(&p, t, r);
        cfg.dt /= 4.0;
        let mut qv = QvRecorder::new(&s, alpha, p, 64);
        let mut sim = Simulator::new(s, cfg, p).unwrap();
        sim.run_until(t, &mut |st, _, _| qv.observe(st)).unwrap();
        qv.finish(sim.state());
        for k in 0..n {
            let c = sim.state().id_type(k as u32);
            realized[k] += qv.realized()[k];
            predicted[k] += qv_predicted(sim.ledger(), k as u32, c, t, &p, alpha);
            disp[k].push(qv.displacement()[k]);
        }
    }
    let centred = disp
        .iter()
        .filter(|d| {
            let (m, se) = common::mean_se(d);
            m.abs() <= 4.0 * se
        })
        .count();
    assert!(centred as f64 >= 0.95 * n as f64, "{centred} of {n} centred");
    let inside = (0..n).filter(|&k| (0.9..=1.1).contains(&(realized[k] / predicted[k]))).count();
    assert!(inside as f64 >= 0.9 * n as f64, "{inside} of {n} ratios in [0.9, 1.1]");
}

#[test]
fn single_brownian_particle_z_has_zero_mean() {
    let p = ModelParams::new(1.0, 1.0, 0.0, 1).unwrap();
    let alpha = 0.0;
    let d: Vec<f64> = (0..2000u64)
        .map(|r| {
            let s = init_iid(&|_| 1.0, &|_| 0.0, 1, r).unwrap();
            let z0 = z_values(&s, alpha, &p)[0];
            let mut cfg = SimConfig::new(&p, 0.01, r);
            cfg.dt = 1e-3;
            let mut sim = Simulator::new(s, cfg, p).unwrap();
            sim.run_until(0.01, &mut |_, _, _| {}).unwrap();
            min_image(z_values(sim.state(), alpha, &p)[0] - z0)
        })
        .collect();
    let (m, se) = common::mean_se(&d);
    assert!(m.abs() <= 4.0 * se);
}

/// `(1/N) sum_{j in T_c, j != i} (2 eps)^-1 1{|x_j - x_i| <= eps}` by direct
/// pairwise distances.
fn local_density_direct(positions: &[f64], types: &[Species], k: usize, eps: f64) -> [f64; 2] {
    let n = positions.len();
    let mut out = [0.0; 2];
    for j in (0..n).filter(|&j| j != k) {
        if min_image(positions[j] - positions[k]).abs() <= eps {
            out[types[j].index()] += 1.0 / (2.0 * eps * n as f64);
        }
    }
    out
}

#[test]
fn replacement_statistic_matches_brute_force_for_two_particles() {
    let p = ModelParams::new(1.0, 2.0, 1.0, 2).unwrap();
    let (t, eps) = (0.5, 0.1);
    let s = init_iid(&|_| 1.0, &|_| 1.0, 2, 21).unwrap();
    let mut cfg = SimConfig::new(&p, t, 21);
    cfg.dt = 1e-5;
    let mut rec = ReplacementRecorder::new(2, eps);
    // trapezoid rule over direct distances, and the pair clock summed from
    // the per-step local times
    let mut dens = [[0.0; 2]; 2];
    let mut clock = [[0.0; 2]; 2];
    let mut prev: Option<Vec<[f64; 2]>> = None;
    let by_id = |st: &twocomp_particles::ParticleState| -> Vec<[f64; 2]> {
        let pos = st.positions();
        let slots = st.slots_by_id();
        (0..2).map(|i| local_density_direct(&pos, st.types(), slots[i], eps)).collect()
    };
    let mut sim = Simulator::new(s, cfg, p).unwrap();
    prev.replace(by_id(sim.state()));
    let v = p.sigma1_sq + p.sigma2_sq;
    let types = sim.state().id_types().to_vec();
    let mut last = sim.state().clone();
    sim.run_until(t, &mut |st, _, rep| {
        rec.observe(&last, rep.dt);
        let now = by_id(st);
        let before = prev.replace(now.clone()).unwrap();
        for i in 0..2 {
            for c in 0..2 {
                dens[i][c] += 0.5 * (before[i][c] + now[i][c]) * rep.dt;
            }
        }
        // with two particles every clock event is shared by ids 0 and 1
        let da = rep.local_time / v / 2.0;
        clock[0][types[1].index()] += da;
        clock[1][types[0].index()] += da;
        last = st.clone();
    })
    .unwrap();
    let ids = sim.state().id_types().to_vec();
    let ledger = sim.ledger();
    for c1 in [Species::One, Species::Two] {
        for c2 in [Species::One, Species::Two] {
            let fast = replacement_statistic(ledger, &rec, &ids, c1, c2);
            let brute = (0..2)
                .filter(|&i| ids[i] == c1)
                .map(|i| (clock[i][c2.index()] - dens[i][c2.index()]).abs())
                .sum::<f64>()
                / 2.0;
            assert!((fast - brute).abs() <= 0.02 * brute.max(1e-12), "{c1:?},{c2:?}: {fast} vs {brute}");
        }
    }
}

#[test]
fn replacement_statistic_without_switching() {
    let p = ModelParams::new(1.0, 1.0, 0.0, 32).unwrap();
    let s = init_iid(&|_| 1.0, &|_| 1.0, 32, 3).unwrap();
    let mut rec = ReplacementRecorder::new(32, 0.1);
    let mut sim = Simulator::new(s, SimConfig::new(&p, 0.01, 3), p).unwrap();
    sim.run_until(0.01, &mut |st, _, rep| rec.observe(st, rep.dt)).unwrap();
    let r = replacement_statistic(sim.ledger(), &rec, sim.state().id_types(), Species::One, Species::Two);
    assert!(r.is_finite() && r > 0.0);
    assert_eq!(sim.ledger().switches(), 0);
    assert_eq!(switch_rate(Species::One, Species::Two, &p), 0.0);
}
