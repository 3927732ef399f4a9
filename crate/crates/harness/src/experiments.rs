//! The computations behind the commands, free of file output.

use rayon::ThreadPool;
use twocomp_core::field::{l1_distance, l2_distance};
use twocomp_core::{DensityField, Grid1D, Species};
use twocomp_pde::{solve_trajectory, two_color_reference_solve, LibmFlux, Snapshots, SolverConfig};

use crate::config::{ExperimentConfig, Reference};
use crate::ensemble::{run_ensemble, run_replacement, run_z_ensemble, Ensemble};
use crate::error::{HarnessError, Result};
use crate::seeds::{family_seed, mix, replica_seeds};
use crate::stats::{bootstrap_interval, mean_se};

/// Initial PDE state: the profiles sampled at the cell centres and scaled to
/// unit total mass, the normalization of the particles' empirical measure.
pub fn initial_field(cfg: &ExperimentConfig, m: usize) -> Result<DensityField> {
    let pr = cfg.profiles()?;
    let grid = Grid1D::new(m).ok_or_else(|| HarnessError::Config(format!("grid of {m} cells")))?;
    let mut f = DensityField::from_fns(grid, |x| pr.rho1.value(x), |x| pr.rho2.value(x));
    let [m1, m2] = f.mass();
    if !(m1 + m2 > 0.0) {
        return Err(HarnessError::Config("initial profiles have zero mass".into()));
    }
    let s = 1.0 / (m1 + m2);
    f.rho1.iter_mut().chain(f.rho2.iter_mut()).for_each(|v| *v *= s);
    Ok(f)
}

/// PDE fields at the snapshot times, and the smallest value seen by the
/// solver.
pub fn solve_pde(cfg: &ExperimentConfig, reference: Reference) -> Result<(Vec<DensityField>, f64)> {
    let times = cfg.snapshot_times();
    solve_pde_with(cfg, &cfg.pde, reference, &times)
}

pub fn solve_pde_with(
    cfg: &ExperimentConfig,
    pde: &SolverConfig,
    reference: Reference,
    times: &[f64],
) -> Result<(Vec<DensityField>, f64)> {
    let rho0 = initial_field(cfg, pde.m)?;
    let snaps = Snapshots::Times(times.to_vec());
    let traj = match reference {
        Reference::CrossDiffusion => solve_trajectory(&rho0, pde, &LibmFlux::new(cfg.model), &snaps)?,
        Reference::TwoColor => {
            if cfg.model.sigma1_sq != 1.0 || cfg.model.sigma2_sq != 1.0 {
                return Err(HarnessError::Config("the two-color reference needs sigma1_sq = sigma2_sq = 1".into()));
            }
            two_color_reference_solve(&rho0, cfg.model.lambda, pde, &snaps)?
        }
    };
    let fields = times
        .iter()
        .map(|&t| {
            traj.snapshots
                .iter()
                .find(|f| f.t == t)
                .cloned()
                .ok_or_else(|| HarnessError::Config(format!("no PDE snapshot at t = {t}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((fields, traj.min_value))
}

/// One line of the comparison report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub t: f64,
    pub n: usize,
    pub epsilon: f64,
    pub l1: [f64; 2],
    pub l2: [f64; 2],
    /// Bootstrap interval of `l1[0] + l1[1]`.
    pub l1_ci: (f64, f64),
}

impl ReportRow {
    pub fn l1_total(&self) -> f64 {
        self.l1[0] + self.l1[1]
    }
}

/// Distances between two fields per species: `([l1, l1], [l2, l2])`.
pub fn field_distances(a: &DensityField, b: &DensityField) -> ([f64; 2], [f64; 2]) {
    (
        [l1_distance(&a.rho1, &b.rho1), l1_distance(&a.rho2, &b.rho2)],
        [l2_distance(&a.rho1, &b.rho1), l2_distance(&a.rho2, &b.rho2)],
    )
}

/// Compare the ensemble-mean densities with PDE fields at the same times.
pub fn compare(ens: &Ensemble, pde: &[DensityField], resamples: usize, seed: u64) -> Result<Vec<ReportRow>> {
    let dx = 1.0 / ens.m as f64;
    if ens.epsilon < 2.0 * dx {
        return Err(HarnessError::GridMismatch { epsilon: ens.epsilon, two_dx: 2.0 * dx });
    }
    if pde.len() != ens.times.len() || pde.iter().any(|f| f.len() != ens.m) {
        return Err(HarnessError::Config("particle and PDE snapshots do not line up".into()));
    }
    let all: Vec<usize> = (0..ens.replicas.len()).collect();
    let mut rows = Vec::with_capacity(pde.len());
    for (s, target) in pde.iter().enumerate() {
        let mean = ens.mean_of(&all, s);
        let (l1, l2) = field_distances(&mean, target);
        let ci = bootstrap_interval(all.len(), resamples, 0.95, mix(seed ^ s as u64), |idx| {
            let (l1, _) = field_distances(&ens.mean_of(idx, s), target);
            l1[0] + l1[1]
        });
        rows.push(ReportRow { t: ens.times[s], n: ens.n, epsilon: ens.epsilon, l1, l2, l1_ci: ci });
    }
    Ok(rows)
}

/// Seed of the bootstrap resampling, split from the master seed.
pub fn bootstrap_seed(master: u64) -> u64 {
    family_seed(master, 0xB007)
}

/// Ensemble at the configured `N` and its comparison with the PDE.
pub fn simulate_and_compare(
    cfg: &ExperimentConfig,
    n: usize,
    master: u64,
    pool: &ThreadPool,
) -> Result<(Ensemble, Vec<DensityField>, Vec<ReportRow>)> {
    let ens = run_ensemble(cfg, n, cfg.pde.m, master, cfg.particles.replicas, pool)?;
    let (pde, _) = solve_pde(cfg, cfg.compare.reference)?;
    let rows = compare(&ens, &pde, cfg.compare.bootstrap_resamples, bootstrap_seed(master))?;
    Ok((ens, pde, rows))
}

/// Comparison rows for every `N` of the sweep, each ensemble seeded from its
/// own split of the master seed.
pub fn sweep(cfg: &ExperimentConfig, master: u64, pool: &ThreadPool) -> Result<Vec<(u64, Vec<ReportRow>)>> {
    let ns = if cfg.sweep.n_values.is_empty() { vec![cfg.model.n] } else { cfg.sweep.n_values.clone() };
    let (pde, _) = solve_pde(cfg, cfg.compare.reference)?;
    ns.iter()
        .map(|&n| {
            let seed = family_seed(master, n as u64);
            let ens = run_ensemble(cfg, n, cfg.pde.m, seed, cfg.particles.replicas, pool)?;
            Ok((seed, compare(&ens, &pde, cfg.compare.bootstrap_resamples, bootstrap_seed(seed))?))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleRow {
    pub id: usize,
    pub species: Species,
    pub mean: f64,
    pub se: f64,
    pub within_4se: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QvRow {
    pub id: usize,
    pub species: Species,
    pub realized: f64,
    pub predicted: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplacementRow {
    pub n: usize,
    pub epsilon: f64,
    pub c1: Species,
    pub c2: Species,
    pub mean: f64,
    pub se: f64,
    pub seeds: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub replica_seeds: Vec<u64>,
    pub martingale: Vec<MartingaleRow>,
    pub qv: Vec<QvRow>,
    pub replacement: Vec<ReplacementRow>,
}

impl Diagnostics {
    pub fn martingale_fraction(&self) -> f64 {
        self.martingale.iter().filter(|r| r.within_4se).count() as f64 / self.martingale.len() as f64
    }

    pub fn qv_fraction(&self, lo: f64, hi: f64) -> f64 {
        self.qv.iter().filter(|r| r.ratio >= lo && r.ratio <= hi).count() as f64 / self.qv.len() as f64
    }

    /// Replacement means of one `(c1, c2)` in table order.
    pub fn replacement_trend(&self, c1: Species, c2: Species) -> Vec<f64> {
        self.replacement.iter().filter(|r| r.c1 == c1 && r.c2 == c2).map(|r| r.mean).collect()
    }
}

pub const PAIRS: [(Species, Species); 4] = [
    (Species::One, Species::One),
    (Species::One, Species::Two),
    (Species::Two, Species::One),
    (Species::Two, Species::Two),
];

/// Martingale means and realized/predicted quadratic variations over the
/// replicas of the main run (pooled per particle), then the replacement
/// table.
pub fn diagnose(cfg: &ExperimentConfig, master: u64, pool: &ThreadPool) -> Result<Diagnostics> {
    let n = cfg.model.n;
    let t = cfg.particles.t_final;
    let (main_seeds, runs) = run_z_ensemble(cfg, n, t, master, cfg.particles.replicas, pool)?;
    let species = runs[0].species.clone();
    let mut martingale = Vec::with_capacity(n);
    let mut qv = Vec::with_capacity(n);
    let mut buf = Vec::with_capacity(runs.len());
    for id in 0..n {
        buf.clear();
        buf.extend(runs.iter().map(|r| r.displacement[id]));
        let (mean, se) = mean_se(&buf);
        let within_4se = if runs.len() > 1 { mean.abs() <= 4.0 * se } else { mean == 0.0 };
        martingale.push(MartingaleRow { id, species: species[id], mean, se, within_4se });
        let realized: f64 = runs.iter().map(|r| r.realized[id]).sum();
        let predicted: f64 = runs.iter().map(|r| r.predicted[id]).sum();
        qv.push(QvRow { id, species: species[id], realized, predicted, ratio: realized / predicted });
    }

    let t_rep = cfg.diagnose.replacement_t_final.unwrap_or(t);
    let mut replacement = Vec::new();
    for (ci, case) in cfg.diagnose.replacement.iter().enumerate() {
        let p = cfg.model_with(case.n);
        let seeds = replica_seeds(family_seed(master, 0x5EED_0000 + ci as u64), cfg.diagnose.replacement_seeds);
        let stats = run_replacement(cfg, &p, case.epsilon, t_rep, &seeds, pool)?;
        for (k, &(c1, c2)) in PAIRS.iter().enumerate() {
            let v: Vec<f64> = stats.iter().map(|s| s[k]).collect();
            let (mean, se) = mean_se(&v);
            replacement.push(ReplacementRow { n: case.n, epsilon: case.epsilon, c1, c2, mean, se, seeds: v.len() });
        }
    }
    Ok(Diagnostics { replica_seeds: main_seeds, martingale, qv, replacement })
}
