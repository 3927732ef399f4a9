use serde::{Deserialize, Serialize};
use twocomp_core::{DensityField, Mat2};

use crate::error::SolveError;
use crate::flux::{midpoint, FluxModel};
use crate::linear::solve_periodic;

/// Values beyond this magnitude are treated as a blow-up.
pub const BLOW_UP_BOUND: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Heun's method with the explicit stability bound enforced.
    ExplicitRk2,
    /// Backward Euler with the mobility lagged at the old time level.
    SemiImplicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub m: usize,
    pub dt: f64,
    pub scheme: Scheme,
    pub t_final: f64,
    #[serde(default = "default_safety")]
    pub stability_safety: f64,
}

fn default_safety() -> f64 {
    0.9
}

impl SolverConfig {
    pub const MIN_CELLS: usize = 8;

    pub fn validate(&self) -> Result<(), SolveError> {
        if self.m < Self::MIN_CELLS {
            return Err(SolveError::Config(format!("m = {} must be at least {}", self.m, Self::MIN_CELLS)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SolveError::Config(format!("dt = {} must be > 0", self.dt)));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(SolveError::Config(format!("t_final = {} must be >= 0", self.t_final)));
        }
        if !(self.stability_safety > 0.0 && self.stability_safety <= 1.0) {
            return Err(SolveError::Config(format!(
                "stability_safety = {} must lie in (0, 1]",
                self.stability_safety
            )));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.m as f64
    }

    /// Largest explicit step allowed for `field`.
    pub fn stability_limit<F: FluxModel + ?Sized>(&self, field: &DensityField, model: &F) -> Result<f64, SolveError> {
        let mut radius = 0.0f64;
        for k in 0..field.len() {
            radius = radius.max(model.diffusion_radius(field.at(k)).map_err(SolveError::model(field.t))?);
        }
        let dx = 1.0 / field.len() as f64;
        Ok(if radius > 0.0 {
            self.stability_safety * dx * dx / (2.0 * radius)
        } else {
            f64::INFINITY
        })
    }
}

/// `(F_k - F_{k-1})/dx` for both species.
fn divergence<F: FluxModel + ?Sized>(field: &DensityField, model: &F) -> Result<[Vec<f64>; 2], SolveError> {
    let m = field.len();
    let dx = 1.0 / m as f64;
    let mut flux = Vec::with_capacity(m);
    for k in 0..m {
        flux.push(model.flux(field.at(k), field.at((k + 1) % m), dx).map_err(SolveError::model(field.t))?);
    }
    let mut out = [vec![0.0; m], vec![0.0; m]];
    for k in 0..m {
        let prev = flux[(k + m - 1) % m];
        out[0][k] = (flux[k][0] - prev[0]) / dx;
        out[1][k] = (flux[k][1] - prev[1]) / dx;
    }
    Ok(out)
}

fn check_blow_up(field: &DensityField) -> Result<(), SolveError> {
    for v in field.rho1.iter().chain(&field.rho2) {
        if !v.is_finite() || v.abs() > BLOW_UP_BOUND {
            return Err(SolveError::BlowUp { t: field.t, value: *v });
        }
    }
    Ok(())
}

fn heun<F: FluxModel + ?Sized>(field: &DensityField, dt: f64, model: &F) -> Result<DensityField, SolveError> {
    let k1 = divergence(field, model)?;
    let stage = DensityField::new(
        field.t + dt,
        field.rho1.iter().zip(&k1[0]).map(|(v, d)| v + dt * d).collect(),
        field.rho2.iter().zip(&k1[1]).map(|(v, d)| v + dt * d).collect(),
    );
    check_blow_up(&stage)?;
    let k2 = divergence(&stage, model)?;
    let h = 0.5 * dt;
    Ok(DensityField::new(
        field.t + dt,
        (0..field.len()).map(|k| field.rho1[k] + h * (k1[0][k] + k2[0][k])).collect(),
        (0..field.len()).map(|k| field.rho2[k] + h * (k1[1][k] + k2[1][k])).collect(),
    ))
}

fn lagged_implicit<F: FluxModel + ?Sized>(field: &DensityField, dt: f64, model: &F) -> Result<DensityField, SolveError> {
    let m = field.len();
    let dx = 1.0 / m as f64;
    let r = dt / (dx * dx);
    let mut mob = Vec::with_capacity(m);
    for k in 0..m {
        let mid = midpoint(field.at(k), field.at((k + 1) % m));
        mob.push(model.mobility(mid).map_err(SolveError::model(field.t))?.scale(r));
    }
    let mut lower = Vec::with_capacity(m);
    let mut diag = Vec::with_capacity(m);
    let mut upper = Vec::with_capacity(m);
    for k in 0..m {
        let left = mob[(k + m - 1) % m];
        let right = mob[k];
        lower.push(left.scale(-1.0));
        upper.push(right.scale(-1.0));
        diag.push(Mat2::IDENTITY + left + right);
    }
    let rhs: Vec<[f64; 2]> = (0..m).map(|k| field.at(k)).collect();
    let x = solve_periodic(&lower, &diag, &upper, &rhs).ok_or(SolveError::Singular { t: field.t })?;
    Ok(DensityField::new(
        field.t + dt,
        x.iter().map(|v| v[0]).collect(),
        x.iter().map(|v| v[1]).collect(),
    ))
}

fn step_by<F: FluxModel + ?Sized>(
    field: &DensityField,
    dt: f64,
    cfg: &SolverConfig,
    model: &F,
) -> Result<DensityField, SolveError> {
    let next = match cfg.scheme {
        Scheme::ExplicitRk2 => {
            let limit = cfg.stability_limit(field, model)?;
            if dt > limit {
                return Err(SolveError::Unstable { dt, limit, t: field.t });
            }
            heun(field, dt, model)?
        }
        Scheme::SemiImplicit => lagged_implicit(field, dt, model)?,
    };
    check_blow_up(&next)?;
    Ok(next)
}

/// One step of size `cfg.dt`.
pub fn step_fields<F: FluxModel + ?Sized>(
    field: &DensityField,
    cfg: &SolverConfig,
    model: &F,
) -> Result<DensityField, SolveError> {
    step_by(field, cfg.dt, cfg, model)
}

/// Which states a solve should keep.
#[derive(Debug, Clone, PartialEq)]
pub enum Snapshots {
    /// The given times (in `(t0, t_final]`); steps are shortened to land on
    /// each of them exactly. Empty means `t_final` only.
    Times(Vec<f64>),
    /// Every time step.
    EveryStep,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Initial state followed by the requested snapshots.
    pub snapshots: Vec<DensityField>,
    /// Smallest value reached by either species at any step. Negative values
    /// are undershoots of the scheme; they are reported, never clipped.
    pub min_value: f64,
    pub steps: usize,
}

impl Trajectory {
    pub fn last(&self) -> &DensityField {
        self.snapshots.last().expect("trajectory holds the initial state")
    }
}

/// Plan of snapshot targets for a run from `t0` to `t_final`.
pub(crate) fn targets(t0: f64, t_final: f64, snapshots: &Snapshots) -> Result<Vec<f64>, SolveError> {
    match snapshots {
        Snapshots::EveryStep => Ok(if t_final > t0 { vec![t_final] } else { vec![] }),
        Snapshots::Times(times) => {
            let mut ts: Vec<f64> = Vec::new();
            for &t in times {
                if !(t >= t0 && t <= t_final) {
                    return Err(SolveError::Config(format!("snapshot time {t} outside [{t0}, {t_final}]")));
                }
                if t > t0 {
                    ts.push(t);
                }
            }
            if times.is_empty() && t_final > t0 {
                ts.push(t_final);
            }
            ts.sort_by(f64::total_cmp);
            ts.dedup();
            Ok(ts)
        }
    }
}

/// Step sizes that reach `target` from `t` with nominal step `dt`, the last
/// one shortened. A remainder below `1e-9 dt` is merged into the previous
/// step.
pub(crate) fn next_step(t: f64, target: f64, dt: f64) -> f64 {
    let rest = target - t;
    if rest <= dt * (1.0 + 1e-9) {
        rest
    } else {
        dt
    }
}

pub fn solve_trajectory<F: FluxModel + ?Sized>(
    rho0: &DensityField,
    cfg: &SolverConfig,
    model: &F,
    snapshots: &Snapshots,
) -> Result<Trajectory, SolveError> {
    cfg.validate()?;
    if rho0.len() != cfg.m {
        return Err(SolveError::Config(format!(
            "initial field has {} cells, configuration expects {}",
            rho0.len(),
            cfg.m
        )));
    }
    check_blow_up(rho0)?;
    let every = matches!(snapshots, Snapshots::EveryStep);
    let mut out = vec![rho0.clone()];
    let mut min_value = rho0.min_value();
    let mut steps = 0;
    let mut cur = rho0.clone();
    for target in targets(rho0.t, cfg.t_final, snapshots)? {
        while cur.t < target {
            let h = next_step(cur.t, target, cfg.dt);
            let mut next = step_by(&cur, h, cfg, model)?;
            if h == target - cur.t {
                next.t = target;
            }
            steps += 1;
            min_value = min_value.min(next.min_value());
            if every && next.t < target {
                out.push(next.clone());
            }
            cur = next;
        }
        out.push(cur.clone());
    }
    Ok(Trajectory { snapshots: out, min_value, steps })
}
