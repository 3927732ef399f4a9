use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use twocomp_core::model::self_diffusion;
use twocomp_core::{DensityField, ModelError};

use crate::error::SolveError;
use crate::solver::{next_step, targets, Snapshots, SolverConfig, Trajectory};

/// Exact solution of the semi-discrete heat equation `d/dt rho = 1/2 Lap_h rho`
/// on the periodic grid, evaluated through the discrete Fourier transform.
struct DiscreteHeat {
    modes: Vec<Complex<f64>>,
    symbol: Vec<f64>,
    t0: f64,
    planner: FftPlanner<f64>,
}

impl DiscreteHeat {
    fn new(total: &[f64], t0: f64) -> Self {
        let m = total.len();
        let mut planner = FftPlanner::new();
        let mut modes: Vec<Complex<f64>> = total.iter().map(|&v| Complex::new(v, 0.0)).collect();
        planner.plan_fft_forward(m).process(&mut modes);
        let dx2 = 1.0 / (m * m) as f64;
        let symbol = (0..m)
            .map(|k| {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
                0.5 * (2.0 * theta.cos() - 2.0) / dx2
            })
            .collect();
        DiscreteHeat { modes, symbol, t0, planner }
    }

    fn at(&mut self, t: f64) -> Vec<f64> {
        let m = self.modes.len();
        let s = t - self.t0;
        let mut buf: Vec<Complex<f64>> = self
            .modes
            .iter()
            .zip(&self.symbol)
            .map(|(c, l)| c * (l * s).exp())
            .collect();
        self.planner.plan_fft_inverse(m).process(&mut buf);
        buf.iter().map(|c| c.re / m as f64).collect()
    }
}

/// Flux of the first color,
/// `1/2 [S(rho) d rho1 + (1 - S(rho)) (rho1/rho) d rho] / dx`, at the
/// interface means.
fn color_flux(r1: [f64; 2], tot: [f64; 2], lambda: f64, dx: f64) -> Result<f64, ModelError> {
    let rho = 0.5 * (tot[0] + tot[1]);
    let rho1 = 0.5 * (r1[0] + r1[1]);
    if !(rho > 0.0) {
        return Err(ModelError::ZeroTotalDensity(rho));
    }
    let s = self_diffusion(rho, lambda);
    Ok(0.5 * (s * (r1[1] - r1[0]) + (1.0 - s) * (rho1 / rho) * (tot[1] - tot[0])) / dx)
}

fn color_rate(r1: &[f64], tot: &[f64], lambda: f64, t: f64) -> Result<Vec<f64>, SolveError> {
    let m = r1.len();
    let dx = 1.0 / m as f64;
    let mut flux = Vec::with_capacity(m);
    for k in 0..m {
        let n = (k + 1) % m;
        flux.push(color_flux([r1[k], r1[n]], [tot[k], tot[n]], lambda, dx).map_err(SolveError::model(t))?);
    }
    Ok((0..m).map(|k| (flux[k] - flux[(k + m - 1) % m]) / dx).collect())
}

/// Staged solve of the two-color system (equal diffusivities): the total
/// density follows the discrete heat flow exactly, then the first color is
/// advanced with Heun's method in the linear equation driven by that total.
/// The explicit bound `dt <= safety dx^2 / 2` applies to the color stage.
pub fn two_color_reference_solve(
    rho0: &DensityField,
    lambda: f64,
    cfg: &SolverConfig,
    snapshots: &Snapshots,
) -> Result<Trajectory, SolveError> {
    cfg.validate()?;
    if !(lambda > 0.0) {
        return Err(SolveError::Config(format!("lambda = {lambda} must be > 0")));
    }
    let dx = cfg.dx();
    let limit = cfg.stability_safety * dx * dx / 2.0;
    if cfg.dt > limit {
        return Err(SolveError::Unstable { dt: cfg.dt, limit, t: rho0.t });
    }
    let total0: Vec<f64> = rho0.rho1.iter().zip(&rho0.rho2).map(|(a, b)| a + b).collect();
    let mut heat = DiscreteHeat::new(&total0, rho0.t);
    let every = matches!(snapshots, Snapshots::EveryStep);
    let snap = |t: f64, r1: &[f64], tot: &[f64]| {
        DensityField::new(t, r1.to_vec(), tot.iter().zip(r1).map(|(a, b)| a - b).collect())
    };

    let mut out = vec![rho0.clone()];
    let mut min_value = rho0.min_value();
    let mut steps = 0;
    let mut t = rho0.t;
    let mut r1 = rho0.rho1.clone();
    let mut tot = total0;
    for target in targets(rho0.t, cfg.t_final, snapshots)? {
        while t < target {
            let h = next_step(t, target, cfg.dt);
            let t_next = if h == target - t { target } else { t + h };
            let k1 = color_rate(&r1, &tot, lambda, t)?;
            let stage: Vec<f64> = r1.iter().zip(&k1).map(|(v, d)| v + h * d).collect();
            let tot_next = heat.at(t_next);
            let k2 = color_rate(&stage, &tot_next, lambda, t_next)?;
            for k in 0..r1.len() {
                r1[k] += 0.5 * h * (k1[k] + k2[k]);
            }
            tot = tot_next;
            t = t_next;
            steps += 1;
            let field = snap(t, &r1, &tot);
            if !field.is_finite() || field.max_abs() > crate::solver::BLOW_UP_BOUND {
                return Err(SolveError::BlowUp { t, value: field.max_abs() });
            }
            min_value = min_value.min(field.min_value());
            if every && t < target {
                out.push(field);
            }
        }
        out.push(snap(t, &r1, &tot));
    }
    Ok(Trajectory { snapshots: out, min_value, steps })
}
