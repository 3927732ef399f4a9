//! Experiment configuration files.

use std::path::Path;

use serde::{Deserialize, Serialize};
use twocomp_core::expr::Profile;
use twocomp_core::ModelParams;
use twocomp_particles::{LocalTimeScheme, SimConfig};
use twocomp_pde::SolverConfig;

use crate::error::{io_err, HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelParams,
    pub particles: ParticlesSection,
    pub pde: SolverConfig,
    pub initial: InitialSection,
    #[serde(default)]
    pub outputs: OutputsSection,
    #[serde(default)]
    pub compare: CompareSection,
    #[serde(default)]
    pub diagnose: DiagnoseSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticlesSection {
    #[serde(default = "one")]
    pub replicas: usize,
    pub t_final: f64,
    /// Master seed; per-replica seeds are split from it.
    #[serde(default)]
    pub seed: u64,
    /// Time step; when absent, `dt_scale` times the default step for the
    /// particle count at hand.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "unit")]
    pub dt_scale: f64,
    /// Kernel half-width; when absent, `N^(-1/3)`.
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub local_time_scheme: LocalTimeScheme,
    #[serde(default = "yes")]
    pub same_type_switching: bool,
    #[serde(default)]
    pub occupation_width: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub rho1: String,
    pub rho2: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsSection {
    #[serde(default = "default_dir")]
    pub directory: String,
    /// Times at which particle and PDE fields are recorded. Empty means the
    /// final time only.
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default)]
    pub plot: bool,
}

impl Default for OutputsSection {
    fn default() -> Self {
        OutputsSection { directory: default_dir(), snapshot_times: Vec::new(), plot: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Reference {
    /// The cross-diffusion solver.
    #[default]
    CrossDiffusion,
    /// The staged two-color solver (equal diffusivities only).
    TwoColor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSection {
    #[serde(default)]
    pub reference: Reference,
    #[serde(default = "default_resamples")]
    pub bootstrap_resamples: usize,
}

impl Default for CompareSection {
    fn default() -> Self {
        CompareSection { reference: Reference::default(), bootstrap_resamples: default_resamples() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplacementCase {
    pub n: usize,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnoseSection {
    /// Steps between samples of the `z` processes in the realized quadratic
    /// variation.
    #[serde(default = "default_stride")]
    pub qv_stride: u64,
    #[serde(default = "default_cases")]
    pub replacement: Vec<ReplacementCase>,
    #[serde(default = "default_seeds")]
    pub replacement_seeds: usize,
    /// Horizon of the replacement runs; the particle horizon when absent.
    #[serde(default)]
    pub replacement_t_final: Option<f64>,
}

impl Default for DiagnoseSection {
    fn default() -> Self {
        DiagnoseSection {
            qv_stride: default_stride(),
            replacement: default_cases(),
            replacement_seeds: default_seeds(),
            replacement_t_final: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default)]
    pub n_values: Vec<usize>,
}

fn one() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

fn default_dir() -> String {
    "out".into()
}

fn default_resamples() -> usize {
    1000
}

fn default_stride() -> u64 {
    64
}

fn default_seeds() -> usize {
    20
}

fn default_cases() -> Vec<ReplacementCase> {
    vec![ReplacementCase { n: 128, epsilon: 0.05 }, ReplacementCase { n: 512, epsilon: 0.01 }]
}

/// Parsed and checked initial profiles.
#[derive(Debug, Clone)]
pub struct Profiles {
    pub rho1: Profile,
    pub rho2: Profile,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_json(&text)
    }

    /// Canonical serialization, the input of the configuration digest.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.pde.validate()?;
        self.profiles()?;
        let p = &self.particles;
        if p.replicas == 0 {
            return Err(HarnessError::Config("particles.replicas must be at least 1".into()));
        }
        if !(p.t_final >= 0.0 && p.t_final.is_finite()) {
            return Err(HarnessError::Config(format!("particles.t_final = {} must be >= 0", p.t_final)));
        }
        if !(p.dt_scale > 0.0 && p.dt_scale.is_finite()) {
            return Err(HarnessError::Config(format!("particles.dt_scale = {} must be > 0", p.dt_scale)));
        }
        let horizon = p.t_final.min(self.pde.t_final);
        for &t in &self.outputs.snapshot_times {
            if !(t >= 0.0 && t <= horizon) {
                return Err(HarnessError::Config(format!(
                    "snapshot time {t} outside [0, {horizon}] (both horizons must cover it)"
                )));
            }
        }
        if self.compare.bootstrap_resamples == 0 {
            return Err(HarnessError::Config("compare.bootstrap_resamples must be at least 1".into()));
        }
        if self.diagnose.replacement_seeds == 0 {
            return Err(HarnessError::Config("diagnose.replacement_seeds must be at least 1".into()));
        }
        if self.sweep.n_values.contains(&0) {
            return Err(HarnessError::Config("sweep.n_values must be positive".into()));
        }
        // the simulation configuration of the main run must be valid too
        self.sim_config(self.model.n, 0)?;
        Ok(())
    }

    pub fn profiles(&self) -> Result<Profiles> {
        Ok(Profiles { rho1: Profile::parse(&self.initial.rho1)?, rho2: Profile::parse(&self.initial.rho2)? })
    }

    /// Model parameters with the particle count replaced.
    pub fn model_with(&self, n: usize) -> ModelParams {
        ModelParams { n, ..self.model }
    }

    pub fn epsilon(&self, n: usize) -> f64 {
        self.particles.epsilon.unwrap_or_else(|| (n as f64).powf(-1.0 / 3.0).min(0.49))
    }

    /// Recording times, sorted; the final time alone when none are listed.
    pub fn snapshot_times(&self) -> Vec<f64> {
        let mut ts = self.outputs.snapshot_times.clone();
        if ts.is_empty() {
            ts.push(self.particles.t_final.min(self.pde.t_final));
        }
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        ts
    }

    /// Simulation settings for `n` particles and one replica seed. Runs end
    /// at the last snapshot.
    pub fn sim_config(&self, n: usize, seed: u64) -> Result<SimConfig> {
        let p = self.model_with(n);
        let times = self.snapshot_times();
        let t_final = times.last().copied().unwrap_or(0.0);
        let cfg = SimConfig {
            dt: self.particles.dt.unwrap_or_else(|| self.particles.dt_scale * SimConfig::default_dt(&p)),
            t_final,
            seed,
            epsilon: self.epsilon(n),
            snapshot_times: times,
            local_time_scheme: self.particles.local_time_scheme,
            same_type_switching: self.particles.same_type_switching,
            occupation_width: self.particles.occupation_width,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const MINIMAL: &str = r#"{
        "model": {"sigma1_sq": 1.0, "sigma2_sq": 2.0, "lambda": 1.0, "n": 16},
        "particles": {"replicas": 2, "t_final": 0.01, "seed": 3},
        "pde": {"m": 64, "dt": 1e-5, "scheme": "explicit-rk2", "t_final": 0.01},
        "initial": {"rho1": "0.5 + 0.2*cos(2*pi*x)", "rho2": "0.5"}
    }"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.outputs.directory, "out");
        assert_eq!(c.compare.bootstrap_resamples, 1000);
        assert_eq!(c.snapshot_times(), vec![0.01]);
        assert!((c.epsilon(8) - 0.5f64.min(0.49)).abs() < 1e-12);
        let s = c.sim_config(16, 1).unwrap();
        assert_eq!(s.dt, SimConfig::default_dt(&c.model));
        assert_eq!(s.t_final, 0.01);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = MINIMAL.replace("\"seed\": 3", "\"seed\": 3, \"sead\": 4");
        assert!(matches!(ExperimentConfig::from_json(&bad), Err(HarnessError::Json(_))));
        let bad = MINIMAL.replace("\"n\": 16", "\"n\": 16, \"N\": 4");
        assert!(ExperimentConfig::from_json(&bad).is_err());
    }

    #[test]
    fn bad_profiles_and_times_are_rejected() {
        let bad = MINIMAL.replace("\"0.5\"}", "\"x - 0.5\"}");
        assert!(matches!(ExperimentConfig::from_json(&bad), Err(HarnessError::Profile(_))));
        let bad = MINIMAL.replace("\"0.5\"}", "\"0.5 + y\"}");
        assert!(matches!(ExperimentConfig::from_json(&bad), Err(HarnessError::Profile(_))));
        let late = MINIMAL.replace(
            "\"initial\"",
            "\"outputs\": {\"snapshot_times\": [0.02]}, \"initial\"",
        );
        assert!(matches!(ExperimentConfig::from_json(&late), Err(HarnessError::Config(_))));
    }

    #[test]
    fn canonical_json_round_trips() {
        let c = ExperimentConfig::from_json(MINIMAL).unwrap();
        let again = ExperimentConfig::from_json(&c.canonical_json()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.canonical_json(), again.canonical_json());
    }
}
