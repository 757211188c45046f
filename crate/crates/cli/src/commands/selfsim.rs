use std::path::Path;

use serde::Serialize;
use vortex_core::io::{write_json, write_profile};
use vortex_core::selfsim::{selfsim_integrate, selfsim_residual, SelfSimError};
use vortex_core::ModelParams;

use super::{prepare, write_record};
use crate::config::{load, Overrides, SelfSimConfig};
use crate::error::CliError;

#[derive(Debug, Serialize)]
struct SelfSimReport {
    samples: usize,
    residual: f64,
    speed_min: f64,
    speed_max: f64,
    curvature_min: f64,
    curvature_max: f64,
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

pub fn run(config: Option<&Path>, overrides: &Overrides, out: &Path) -> Result<(), CliError> {
    let mut cfg: SelfSimConfig = load(config)?;
    cfg.apply(overrides)?;
    let params = ModelParams { epsilon: cfg.epsilon, r_c: 0.0, b: 1.0, delta: 0.0 };
    params.validate()?;
    prepare(out)?;
    write_record(out, "selfsim", &cfg)?;
    let profile = selfsim_integrate(cfg.g0, cfg.g0_prime, cfg.eta_start, cfg.eta_end, &params, cfg.tol, cfg.samples)
        .map_err(|e| match e {
            SelfSimError::ProfileBlowup { .. } => CliError::Solver { message: e.to_string(), snapshot: None },
            SelfSimError::InvalidInput(m) => CliError::Usage(m),
        })?;
    write_profile(&out.join("profile.csv"), &profile)?;
    let (speed_min, speed_max) = range(profile.g_prime.iter().map(|g| g.norm()));
    let (curvature_min, curvature_max) = range(profile.curvature().into_iter());
    let report = SelfSimReport {
        samples: profile.len(),
        residual: selfsim_residual(&profile),
        speed_min,
        speed_max,
        curvature_min,
        curvature_max,
    };
    write_json(&out.join("report.json"), &report)?;
    Ok(())
}
