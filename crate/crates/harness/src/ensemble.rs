//! Independent replicas of the particle system, run in parallel and reduced
//! in replica order.

use rayon::prelude::*;
use rayon::ThreadPool;
use twocomp_core::model::alpha_const;
use twocomp_core::{DensityField, ModelParams, Species};
use twocomp_particles::{
    empirical_density, init_iid, qv_predicted, replacement_statistic, ParticleState, QvRecorder, ReplacementRecorder,
    SimConfig, SimError, Simulator,
};

use crate::config::{ExperimentConfig, Profiles};
use crate::error::{HarnessError, Result};
use crate::seeds::replica_seeds;
use crate::stats::mean_se;

pub fn thread_pool(threads: Option<usize>) -> Result<ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        b = b.num_threads(t.max(1));
    }
    b.build().map_err(|e| HarnessError::Pool(e.to_string()))
}

/// Run `job` for every seed on `pool`; results come back in seed order and
/// the first failing replica (by index) is reported.
pub fn par_replicas<T: Send>(
    pool: &ThreadPool,
    seeds: &[u64],
    job: impl Fn(usize, u64) -> std::result::Result<T, SimError> + Sync,
) -> Result<Vec<T>> {
    let results: Vec<_> = pool.install(|| seeds.par_iter().enumerate().map(|(i, &s)| job(i, s)).collect());
    results
        .into_iter()
        .enumerate()
        .map(|(replica, r)| r.map_err(|source| HarnessError::Replica { replica, seed: seeds[replica], source }))
        .collect()
}

/// Initial configuration of one replica.
pub fn initial_state(profiles: &Profiles, n: usize, seed: u64) -> std::result::Result<ParticleState, SimError> {
    init_iid(&|x| profiles.rho1.value(x), &|x| profiles.rho2.value(x), n, seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaRun {
    pub seed: u64,
    pub type_counts: [usize; 2],
    /// Smoothed densities at the snapshot times.
    pub fields: Vec<DensityField>,
    pub switches: u64,
    /// `sum_{i != j} A_ij` at the end of the run.
    pub local_time: f64,
    pub steps: u64,
    /// Steps whose order had to be restored by projection.
    pub projections: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub n: usize,
    pub epsilon: f64,
    pub m: usize,
    pub times: Vec<f64>,
    pub replicas: Vec<ReplicaRun>,
}

impl Ensemble {
    pub fn seeds(&self) -> Vec<u64> {
        self.replicas.iter().map(|r| r.seed).collect()
    }

    /// Mean field over the listed replicas (with repetition) at snapshot `s`.
    pub fn mean_of(&self, replicas: &[usize], s: usize) -> DensityField {
        let mut r1 = vec![0.0; self.m];
        let mut r2 = vec![0.0; self.m];
        for &i in replicas {
            let f = &self.replicas[i].fields[s];
            for k in 0..self.m {
                r1[k] += f.rho1[k];
                r2[k] += f.rho2[k];
            }
        }
        let w = 1.0 / replicas.len() as f64;
        r1.iter_mut().chain(r2.iter_mut()).for_each(|v| *v *= w);
        DensityField::new(self.times[s], r1, r2)
    }

    /// Pointwise mean and standard error at snapshot `s`.
    pub fn mean_se(&self, s: usize) -> (DensityField, DensityField) {
        let mut mean = [vec![0.0; self.m], vec![0.0; self.m]];
        let mut se = [vec![0.0; self.m], vec![0.0; self.m]];
        let mut buf = Vec::with_capacity(self.replicas.len());
        for c in 0..2 {
            for k in 0..self.m {
                buf.clear();
                buf.extend(self.replicas.iter().map(|r| r.fields[s].species(c)[k]));
                let (m, e) = mean_se(&buf);
                mean[c][k] = m;
                se[c][k] = e;
            }
        }
        let [m1, m2] = mean;
        let [e1, e2] = se;
        (DensityField::new(self.times[s], m1, m2), DensityField::new(self.times[s], e1, e2))
    }
}

/// `replicas` trajectories with `n` particles, smoothed on `m` cells at the
/// configured snapshot times.
pub fn run_ensemble(
    cfg: &ExperimentConfig,
    n: usize,
    m: usize,
    master_seed: u64,
    replicas: usize,
    pool: &ThreadPool,
) -> Result<Ensemble> {
    let profiles = cfg.profiles()?;
    let p = cfg.model_with(n);
    let eps = cfg.epsilon(n);
    let base = cfg.sim_config(n, 0)?;
    let seeds = replica_seeds(master_seed, replicas);
    let runs = par_replicas(pool, &seeds, |_, seed| {
        let state = initial_state(&profiles, n, seed)?;
        let type_counts = state.type_counts();
        let mut sim = Simulator::new(state, SimConfig { seed, ..base.clone() }, p)?;
        let mut fields = Vec::new();
        let mut projections = 0;
        sim.run(&mut |_, _, r| projections += r.sweeps as u64, &mut |snap| {
            let mut f = empirical_density(snap.state, eps, m);
            f.t = snap.t;
            fields.push(f);
        })?;
        Ok(ReplicaRun {
            seed,
            type_counts,
            fields,
            switches: sim.ledger().switches(),
            local_time: sim.ledger().total(),
            steps: sim.steps(),
            projections,
        })
    })?;
    Ok(Ensemble { n, epsilon: eps, m, times: base.snapshot_times, replicas: runs })
}

/// Per-particle martingale and quadratic-variation records of one replica,
/// indexed by id.
#[derive(Debug, Clone, PartialEq)]
pub struct ZRecord {
    pub species: Vec<Species>,
    pub displacement: Vec<f64>,
    pub realized: Vec<f64>,
    pub predicted: Vec<f64>,
}

/// Run `replicas` trajectories to `t_final` with `n` particles, recording the
/// `z` processes of every particle.
pub fn run_z_ensemble(
    cfg: &ExperimentConfig,
    n: usize,
    t_final: f64,
    master_seed: u64,
    replicas: usize,
    pool: &ThreadPool,
) -> Result<(Vec<u64>, Vec<ZRecord>)> {
    let profiles = cfg.profiles()?;
    let p = cfg.model_with(n);
    let base = SimConfig { t_final, snapshot_times: Vec::new(), ..cfg.sim_config(n, 0)? };
    let stride = cfg.diagnose.qv_stride;
    let seeds = replica_seeds(master_seed, replicas);
    let runs = par_replicas(pool, &seeds, |_, seed| {
        let state = initial_state(&profiles, n, seed)?;
        let [n1, n2] = state.type_counts();
        let alpha = alpha_const(&p, n1 as f64 / n as f64, n2 as f64 / n as f64)?;
        let mut qv = QvRecorder::new(&state, alpha, p, stride);
        let mut sim = Simulator::new(state, SimConfig { seed, ..base.clone() }, p)?;
        sim.run_until(t_final, &mut |st, _, _| qv.observe(st))?;
        qv.finish(sim.state());
        let species = sim.state().id_types().to_vec();
        let predicted = (0..n)
            .map(|id| qv_predicted(sim.ledger(), id as u32, species[id], sim.time(), &p, alpha))
            .collect();
        Ok(ZRecord { species, displacement: qv.displacement().to_vec(), realized: qv.realized().to_vec(), predicted })
    })?;
    Ok((seeds, runs))
}

/// Replacement statistic of one trajectory for every `(c1, c2)`, in the
/// order (1,1), (1,2), (2,1), (2,2).
pub fn run_replacement(
    cfg: &ExperimentConfig,
    p: &ModelParams,
    epsilon: f64,
    t_final: f64,
    seeds: &[u64],
    pool: &ThreadPool,
) -> Result<Vec<[f64; 4]>> {
    let profiles = cfg.profiles()?;
    let n = p.n;
    let base = SimConfig { t_final, snapshot_times: Vec::new(), epsilon, ..cfg.sim_config(n, 0)? };
    par_replicas(pool, seeds, |_, seed| {
        let state = initial_state(&profiles, n, seed)?;
        let mut rec = ReplacementRecorder::new(n, epsilon);
        let mut sim = Simulator::new(state, SimConfig { seed, ..base.clone() }, *p)?;
        sim.run_until(t_final, &mut |st, _, r| rec.observe(st, r.dt))?;
        let ids = sim.state().id_types();
        let mut out = [0.0; 4];
        for (i, (c1, c2)) in [
            (Species::One, Species::One),
            (Species::One, Species::Two),
            (Species::Two, Species::One),
            (Species::Two, Species::Two),
        ]
        .into_iter()
        .enumerate()
        {
            out[i] = replacement_statistic(sim.ledger(), &rec, ids, c1, c2);
        }
        Ok(out)
    })
}
