//! The five commands: run, write CSV (and optionally SVG) outputs, and a
//! manifest for each output directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use twocomp_core::{DensityField, PdeCorrespondence, SpeciesPair};

use crate::config::{ExperimentConfig, Reference};
use crate::ensemble::{run_ensemble, thread_pool, Ensemble};
use crate::error::{HarnessError, Result};
use crate::experiments::{self, ReportRow};
use crate::output::{num, read_columns, Manifest, OutputDir, FIELD_HEADER, REPORT_HEADER};
use crate::plot::{Axis, Chart, Series};

/// Command-line overrides shared by every command.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Output directory; the configured one when absent.
    pub out_dir: Option<PathBuf>,
    /// Master seed; the configured one when absent.
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    /// Write SVG plots (also enabled by `outputs.plot`).
    pub plot: bool,
    /// Leave wall-clock timings out of the manifest so that repeated runs are
    /// byte-identical.
    pub omit_timings: bool,
    /// `solve` only: also write the Maxwell-Stefan form of the solution.
    pub ms_form: bool,
    /// `D12` of the Maxwell-Stefan form; chosen automatically when absent.
    pub ms_d12: Option<f64>,
}

/// What a command did: its manifest and one summary line per result.
#[derive(Debug, Clone)]
pub struct CommandOutput {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub summary: Vec<String>,
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    opts: &'a RunOptions,
    master: u64,
    out: OutputDir,
    timings: BTreeMap<String, u64>,
    started: Instant,
}

impl<'a> Ctx<'a> {
    fn new(cfg: &'a ExperimentConfig, opts: &'a RunOptions) -> Result<Self> {
        let dir = opts.out_dir.clone().unwrap_or_else(|| PathBuf::from(&cfg.outputs.directory));
        Ok(Ctx {
            cfg,
            opts,
            master: opts.seed.unwrap_or(cfg.particles.seed),
            out: OutputDir::create(&dir)?,
            timings: BTreeMap::new(),
            started: Instant::now(),
        })
    }

    fn plot(&self) -> bool {
        self.opts.plot || self.cfg.outputs.plot
    }

    fn time<T>(&mut self, label: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t0 = Instant::now();
        let r = f()?;
        self.timings.insert(label.to_string(), t0.elapsed().as_millis() as u64);
        Ok(r)
    }

    fn finish(mut self, command: &str, replica_seeds: Vec<u64>, summary: Vec<String>) -> Result<CommandOutput> {
        let mut m = Manifest::new(command, &self.cfg.canonical_json(), self.master, replica_seeds);
        if !self.opts.omit_timings {
            self.timings.insert("total".into(), self.started.elapsed().as_millis() as u64);
            m.timings_ms = std::mem::take(&mut self.timings);
        }
        let dir = self.out.path("");
        let manifest = self.out.finish(m)?;
        Ok(CommandOutput { dir, manifest, summary })
    }
}

fn field_rows(fields: &[(DensityField, Option<DensityField>)]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (mean, se) in fields {
        let grid = mean.grid();
        for k in 0..mean.len() {
            let (e1, e2) = se.as_ref().map_or((0.0, 0.0), |s| (s.rho1[k], s.rho2[k]));
            rows.push(vec![num(mean.t), num(grid.x(k)), num(mean.rho1[k]), num(e1), num(mean.rho2[k]), num(e2)]);
        }
    }
    rows
}

fn report_rows(rows: &[ReportRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            vec![
                num(r.t),
                r.n.to_string(),
                num(r.epsilon),
                num(r.l1[0]),
                num(r.l1[1]),
                num(r.l2[0]),
                num(r.l2[1]),
                num(r.l1_ci.0),
                num(r.l1_ci.1),
            ]
        })
        .collect()
}

fn report_line(r: &ReportRow) -> String {
    format!(
        "t={} N={} eps={:.4}: L1 rho1={:.5} rho2={:.5}, L2 rho1={:.5} rho2={:.5}, L1 95% CI [{:.5}, {:.5}]",
        r.t, r.n, r.epsilon, r.l1[0], r.l1[1], r.l2[0], r.l2[1], r.l1_ci.0, r.l1_ci.1
    )
}

/// Plot the last snapshot of a field CSV.
fn plot_fields(csv: &Path, title: &str) -> Result<String> {
    let cols = read_columns(csv, &["t", "x", "rho1_mean", "rho2_mean"])?;
    let t_last = cols[0].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pick = |c: usize| -> Vec<(f64, f64)> {
        (0..cols[0].len()).filter(|&i| cols[0][i] == t_last).map(|i| (cols[1][i], cols[c][i])).collect()
    };
    Ok(Chart {
        title: format!("{title}, t = {t_last}"),
        x_label: "x".into(),
        y_label: "density".into(),
        series: vec![Series::new("rho1", pick(2)), Series::new("rho2", pick(3))],
        ..Default::default()
    }
    .render())
}

fn ensemble_fields(ens: &Ensemble) -> Vec<(DensityField, Option<DensityField>)> {
    (0..ens.times.len())
        .map(|s| {
            let (m, e) = ens.mean_se(s);
            (m, Some(e))
        })
        .collect()
}

fn write_replicas(out: &mut OutputDir, ens: &Ensemble) -> Result<()> {
    let rows = ens.replicas.iter().enumerate().map(|(i, r)| {
        vec![
            i.to_string(),
            r.seed.to_string(),
            r.type_counts[0].to_string(),
            r.type_counts[1].to_string(),
            r.steps.to_string(),
            r.switches.to_string(),
            num(r.local_time),
            r.projections.to_string(),
        ]
    });
    out.write_csv(
        "replicas.csv",
        &["replica", "seed", "n1", "n2", "steps", "switches", "local_time", "projections"],
        rows,
    )
}

pub fn cmd_simulate(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<CommandOutput> {
    let mut ctx = Ctx::new(cfg, opts)?;
    let pool = thread_pool(opts.threads)?;
    let master = ctx.master;
    let ens = ctx.time("particles", || run_ensemble(cfg, cfg.model.n, cfg.pde.m, master, cfg.particles.replicas, &pool))?;
    ctx.out.write_csv("particles_fields.csv", &FIELD_HEADER, field_rows(&ensemble_fields(&ens)))?;
    write_replicas(&mut ctx.out, &ens)?;
    if ctx.plot() {
        let svg = plot_fields(&ctx.out.path("particles_fields.csv"), "ensemble mean")?;
        ctx.out.write_text("particles_fields.svg", &svg)?;
    }
    let switches: u64 = ens.replicas.iter().map(|r| r.switches).sum();
    let summary = vec![format!(
        "simulated {} replicas of N={} to t={} (eps={:.4}, {} switches)",
        ens.replicas.len(),
        ens.n,
        ens.times.last().copied().unwrap_or(0.0),
        ens.epsilon,
        switches
    )];
    let seeds = ens.seeds();
    ctx.finish("simulate", seeds, summary)
}

/// `D12` for the Maxwell-Stefan form: large enough that the concentrations
/// `u = rho / a` stay in the simplex.
fn auto_d12(cfg: &ExperimentConfig, fields: &[DensityField]) -> f64 {
    let d13 = 1.0 / cfg.model.sigma1_sq;
    let d23 = 1.0 / cfg.model.sigma2_sq;
    let k = cfg.model.lambda * cfg.model.sigma1_sq * cfg.model.sigma2_sq;
    let max_total =
        fields.iter().flat_map(|f| f.rho1.iter().zip(&f.rho2).map(|(a, b)| a + b)).fold(0.0f64, f64::max);
    d13.max(d23) + 2.0 * max_total / k
}

pub fn cmd_solve(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<CommandOutput> {
    let mut ctx = Ctx::new(cfg, opts)?;
    let (fields, min_value) = ctx.time("pde", || experiments::solve_pde(cfg, Reference::CrossDiffusion))?;
    let tagged: Vec<_> = fields.iter().map(|f| (f.clone(), None)).collect();
    ctx.out.write_csv("pde_fields.csv", &FIELD_HEADER, field_rows(&tagged))?;
    let summary_rows = fields.iter().map(|f| {
        let [m1, m2] = f.mass();
        let total: Vec<f64> = f.rho1.iter().zip(&f.rho2).map(|(a, b)| a + b).collect();
        vec![
            num(f.t),
            num(m1),
            num(m2),
            num(f.min_value()),
            num(twocomp_core::field::cosine_amplitude(&f.rho1, 1)),
            num(twocomp_core::field::cosine_amplitude(&f.rho2, 1)),
            num(twocomp_core::field::cosine_amplitude(&total, 1)),
        ]
    });
    ctx.out.write_csv(
        "pde_summary.csv",
        &["t", "mass_rho1", "mass_rho2", "min_value", "amp_rho1", "amp_rho2", "amp_total"],
        summary_rows,
    )?;
    let mut summary = vec![format!(
        "solved on {} cells to t={} ({} snapshots, min value {min_value:e})",
        cfg.pde.m,
        fields.last().map_or(0.0, |f| f.t),
        fields.len()
    )];
    if opts.ms_form {
        let d12 = opts.ms_d12.unwrap_or_else(|| auto_d12(cfg, &fields));
        let corr = PdeCorrespondence::from_libm(&cfg.model, d12)?;
        let mut rows = Vec::new();
        for f in &fields {
            let grid = f.grid();
            for k in 0..f.len() {
                let u = corr.concentration_from_density(SpeciesPair::new(f.rho1[k], f.rho2[k]));
                rows.push(vec![
                    num(corr.ms_time(f.t)),
                    num(grid.x(k)),
                    num(u.rho1),
                    num(u.rho2),
                    num(1.0 - u.rho1 - u.rho2),
                ]);
            }
        }
        ctx.out.write_csv("ms_fields.csv", &["tau", "x", "u1", "u2", "u3"], rows)?;
        summary.push(format!(
            "Maxwell-Stefan form with D12={d12}, D13={}, D23={}, time tau = t/2",
            corr.ms.d13, corr.ms.d23
        ));
    }
    if ctx.plot() {
        let svg = plot_fields(&ctx.out.path("pde_fields.csv"), "PDE solution")?;
        ctx.out.write_text("pde_fields.svg", &svg)?;
    }
    ctx.finish("solve", Vec::new(), summary)
}

pub fn cmd_compare(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<CommandOutput> {
    let mut ctx = Ctx::new(cfg, opts)?;
    let pool = thread_pool(opts.threads)?;
    let master = ctx.master;
    let (ens, pde, rows) = ctx.time("compare", || experiments::simulate_and_compare(cfg, cfg.model.n, master, &pool))?;
    ctx.out.write_csv("report.csv", &REPORT_HEADER, report_rows(&rows))?;
    let mut both = Vec::new();
    for (s, target) in pde.iter().enumerate() {
        let (mean, _) = ens.mean_se(s);
        let grid = target.grid();
        for k in 0..target.len() {
            both.push(vec![
                num(target.t),
                num(grid.x(k)),
                num(mean.rho1[k]),
                num(mean.rho2[k]),
                num(target.rho1[k]),
                num(target.rho2[k]),
            ]);
        }
    }
    ctx.out.write_csv("compare_fields.csv", &["t", "x", "rho1_particles", "rho2_particles", "rho1_pde", "rho2_pde"], both)?;
    if ctx.plot() {
        let path = ctx.out.path("compare_fields.csv");
        let cols = read_columns(&path, &["t", "x", "rho1_particles", "rho2_particles", "rho1_pde", "rho2_pde"])?;
        let t_last = cols[0].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let pick = |c: usize| -> Vec<(f64, f64)> {
            (0..cols[0].len()).filter(|&i| cols[0][i] == t_last).map(|i| (cols[1][i], cols[c][i])).collect()
        };
        let svg = Chart {
            title: format!("particles vs PDE, t = {t_last}"),
            x_label: "x".into(),
            y_label: "density".into(),
            series: vec![
                Series::new("rho1 particles", pick(2)),
                Series::new("rho2 particles", pick(3)),
                Series::new("rho1 PDE", pick(4)).dashed(),
                Series::new("rho2 PDE", pick(5)).dashed(),
            ],
            ..Default::default()
        }
        .render();
        ctx.out.write_text("compare_fields.svg", &svg)?;
    }
    let summary = rows.iter().map(report_line).collect();
    let seeds = ens.seeds();
    ctx.finish("compare", seeds, summary)
}

pub fn cmd_diagnose(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<CommandOutput> {
    let mut ctx = Ctx::new(cfg, opts)?;
    let pool = thread_pool(opts.threads)?;
    let master = ctx.master;
    let d = ctx.time("diagnose", || experiments::diagnose(cfg, master, &pool))?;
    let sp = |c: twocomp_core::Species| (c.index() + 1).to_string();
    ctx.out.write_csv(
        "martingale.csv",
        &["id", "type", "mean_dz", "se_dz", "within_4se"],
        d.martingale.iter().map(|r| vec![r.id.to_string(), sp(r.species), num(r.mean), num(r.se), r.within_4se.to_string()]),
    )?;
    ctx.out.write_csv(
        "qv.csv",
        &["id", "type", "realized", "predicted", "ratio"],
        d.qv.iter().map(|r| vec![r.id.to_string(), sp(r.species), num(r.realized), num(r.predicted), num(r.ratio)]),
    )?;
    ctx.out.write_csv(
        "replacement.csv",
        &["N", "epsilon", "c1", "c2", "mean", "se", "seeds"],
        d.replacement.iter().map(|r| {
            vec![r.n.to_string(), num(r.epsilon), sp(r.c1), sp(r.c2), num(r.mean), num(r.se), r.seeds.to_string()]
        }),
    )?;
    let mut summary = vec![
        format!(
            "martingale: {} of {} particles within 4 SE of zero",
            d.martingale.iter().filter(|r| r.within_4se).count(),
            d.martingale.len()
        ),
        format!(
            "quadratic variation: {} of {} ratios in [0.9, 1.1]",
            d.qv.iter().filter(|r| (0.9..=1.1).contains(&r.ratio)).count(),
            d.qv.len()
        ),
    ];
    for r in &d.replacement {
        summary.push(format!(
            "replacement N={} eps={} ({}, {}): {:.6e} +- {:.1e}",
            r.n,
            r.epsilon,
            sp(r.c1),
            sp(r.c2),
            r.mean,
            r.se
        ));
    }
    let seeds = d.replica_seeds.clone();
    ctx.finish("diagnose", seeds, summary)
}

pub fn cmd_sweep(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<CommandOutput> {
    let mut ctx = Ctx::new(cfg, opts)?;
    let pool = thread_pool(opts.threads)?;
    let master = ctx.master;
    let runs = ctx.time("sweep", || experiments::sweep(cfg, master, &pool))?;
    let all: Vec<ReportRow> = runs.iter().flat_map(|(_, r)| r.iter().cloned()).collect();
    ctx.out.write_csv("sweep_report.csv", &REPORT_HEADER, report_rows(&all))?;
    let last: Vec<ReportRow> = runs.iter().filter_map(|(_, r)| r.last().cloned()).collect();
    ctx.out.write_csv("convergence.csv", &REPORT_HEADER, report_rows(&last))?;
    if ctx.plot() {
        let cols = read_columns(&ctx.out.path("convergence.csv"), &["N", "l1_rho1", "l1_rho2"])?;
        let series = |c: usize, name: &str| Series::new(name, cols[0].iter().copied().zip(cols[c].iter().copied()).collect());
        let svg = Chart {
            title: "L1 distance to the PDE at the final time".into(),
            x_label: "N".into(),
            y_label: "L1 distance".into(),
            x_axis: Axis::Log,
            y_axis: Axis::Log,
            series: vec![series(1, "rho1"), series(2, "rho2")],
        }
        .render();
        ctx.out.write_text("convergence.svg", &svg)?;
    }
    let summary = last.iter().map(report_line).collect();
    // the manifest lists the master seed of each N
    let seeds = runs.iter().map(|(s, _)| *s).collect();
    ctx.finish("sweep", seeds, summary)
}

pub fn run_command(name: &str, cfg: &ExperimentConfig, opts: &RunOptions) -> Result<CommandOutput> {
    match name {
        "simulate" => cmd_simulate(cfg, opts),
        "solve" => cmd_solve(cfg, opts),
        "compare" => cmd_compare(cfg, opts),
        "diagnose" => cmd_diagnose(cfg, opts),
        "sweep" => cmd_sweep(cfg, opts),
        other => Err(HarnessError::Config(format!("unknown command `{other}`"))),
    }
}
