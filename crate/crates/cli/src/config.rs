//! JSON configuration records for every subcommand.
//!
//! Every field has a default, so an empty object (or no `--config` at all)
//! reproduces the reference experiment of the subcommand. Command-line
//! flags are applied on top of the file values.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use vortex_core::analysis::DetectorConfig;
use vortex_core::experiment::{EyeRunConfig, PairRunConfig};
use vortex_core::{IntegratorConfig, ModelParams, Vec3};

use crate::error::CliError;

/// Flags that override values from the configuration file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub snapshot_times: Option<Vec<f64>>,
    pub tol: Option<f64>,
}

impl Overrides {
    fn integrator(&self, cfg: &mut IntegratorConfig) {
        if let Some(tol) = self.tol {
            cfg.abs_tol = tol;
            cfg.rel_tol = tol;
        }
    }

    fn snapshots(&self, times: &mut Vec<f64>) {
        if let Some(t) = &self.snapshot_times {
            times.clone_from(t);
        }
    }
}

pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    let Some(path) = path else { return Ok(T::default()) };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
}

fn check_tol(tol: Option<f64>) -> Result<(), CliError> {
    match tol {
        Some(t) if !(t > 0.0 && t.is_finite()) => Err(CliError::Usage(format!("--tol must be positive, got {t}"))),
        _ => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PairConfig {
    pub run: PairRunConfig,
    pub detector: DetectorConfig,
    /// Impulse component (0, 1 or 2) fed to the reconnection detector.
    pub detector_component: usize,
    /// Length of the window after the detected onset used for the
    /// separation power-law fit.
    pub separation_window: f64,
}

impl Default for PairConfig {
    fn default() -> Self {
        Self {
            run: PairRunConfig::default(),
            detector: DetectorConfig::default(),
            detector_component: 0,
            separation_window: 0.1,
        }
    }
}

impl PairConfig {
    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        check_tol(o.tol)?;
        o.integrator(&mut self.run.integrator);
        o.snapshots(&mut self.run.snapshot_times);
        if let Some(seed) = o.seed {
            match self.run.noise.as_mut() {
                Some(n) => n.seed = seed,
                None => return Err(CliError::Usage("--seed needs a noise block in the pair configuration".into())),
            }
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.run.params.validate()?;
        self.run.integrator.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        if self.detector_component > 2 {
            return Err(CliError::Usage(format!(
                "detector_component must be 0, 1 or 2, got {}",
                self.detector_component
            )));
        }
        if !(self.run.t_end > 0.0) {
            return Err(CliError::Usage("t_end must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EyeConfig {
    pub run: EyeRunConfig,
    /// Earliest time considered when searching for the shape recurrence.
    pub recurrence_after: f64,
    /// Largest relative shape distance accepted as a recurrence.
    pub recurrence_threshold: f64,
    /// Uniform samples per quasi-period for the Fourier analysis.
    pub fourier_samples: usize,
    pub fourier_max_k: usize,
}

impl Default for EyeConfig {
    fn default() -> Self {
        Self {
            run: EyeRunConfig::default(),
            recurrence_after: 1.0,
            recurrence_threshold: 0.25,
            fourier_samples: 1024,
            fourier_max_k: 12,
        }
    }
}

impl EyeConfig {
    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        check_tol(o.tol)?;
        o.integrator(&mut self.run.integrator);
        o.snapshots(&mut self.run.snapshot_times);
        self.run.integrator.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        if !(self.run.t_end > 0.0) {
            return Err(CliError::Usage("t_end must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelfSimConfig {
    pub g0: Vec3,
    pub g0_prime: Vec3,
    pub eta_start: f64,
    pub eta_end: f64,
    pub epsilon: f64,
    pub tol: f64,
    pub samples: usize,
}

impl Default for SelfSimConfig {
    fn default() -> Self {
        Self {
            g0: Vec3::new(0.3, 0.1, 1e-3),
            g0_prime: Vec3::new(0.0, 0.0, 1.0),
            eta_start: 1e-3,
            eta_end: 10.0,
            epsilon: 0.0,
            tol: 1e-10,
            samples: 2001,
        }
    }
}

impl SelfSimConfig {
    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        check_tol(o.tol)?;
        if let Some(t) = o.tol {
            self.tol = t;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RndfConfig {
    pub terms: usize,
    pub samples: usize,
    /// Reference time for the rational probe.
    pub t_star: f64,
    pub rationals: Vec<(u32, u32)>,
    pub probe_half_width: f64,
}

impl Default for RndfConfig {
    fn default() -> Self {
        Self {
            terms: 1000,
            samples: 4096,
            t_star: std::f64::consts::FRAC_PI_4,
            rationals: vec![(1, 1), (1, 2), (3, 2), (2, 1), (1, 3), (2, 3), (4, 3), (5, 4), (6, 5)],
            probe_half_width: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CrowConfig {
    pub params: ModelParams,
    pub omega_max: f64,
    pub samples: usize,
}

impl Default for CrowConfig {
    fn default() -> Self {
        Self { params: ModelParams { epsilon: 0.05, r_c: 0.025, b: 0.11, delta: 0.0 }, omega_max: 4.0, samples: 401 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    /// Template for every run; `epsilon` and `r_c` are replaced per run and
    /// `b = √ε/2`, `δ = b/20` recomputed.
    pub base: PairConfig,
    /// Interaction strengths; empty means the template value only.
    pub epsilons: Vec<f64>,
    /// Core radii; empty means the template value only.
    pub r_cs: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { base: PairConfig::default(), epsilons: vec![0.03, 0.05, 0.07], r_cs: Vec::new() }
    }
}

/// Provenance record written as `config.json` in every output directory.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunRecord<T> {
    pub command: String,
    pub version: String,
    pub config: T,
}

impl<T> RunRecord<T> {
    pub fn new(command: &str, config: T) -> Self {
        Self { command: command.to_string(), version: env!("CARGO_PKG_VERSION").to_string(), config }
    }
}
