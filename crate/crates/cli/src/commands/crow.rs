use std::path::Path;

use serde::Serialize;
use vortex_core::analysis::crow::fastest_growth;
use vortex_core::analysis::crow_analysis;
use vortex_core::io::{write_json, write_table};

use super::{prepare, write_record};
use crate::config::{load, CrowConfig};
use crate::error::CliError;

#[derive(Debug, Serialize)]
struct CrowReport {
    omega_threshold: f64,
    lambda_min: f64,
    translation_velocity: f64,
    fastest_omega: f64,
    fastest_rate: f64,
}

pub fn run(config: Option<&Path>, out: &Path) -> Result<(), CliError> {
    let cfg: CrowConfig = load(config)?;
    cfg.params.validate()?;
    if cfg.samples < 2 || !(cfg.omega_max > 0.0) {
        return Err(CliError::Usage("crow needs samples >= 2 and omega_max > 0".into()));
    }
    prepare(out)?;
    write_record(out, "crow", &cfg)?;
    let omegas: Vec<f64> = (0..cfg.samples).map(|i| cfg.omega_max * i as f64 / (cfg.samples - 1) as f64).collect();
    let res = crow_analysis(&cfg.params, &omegas).map_err(|e| CliError::Usage(e.to_string()))?;
    write_table(
        &out.join("crow.csv"),
        &["omega", "wavelength", "growth_rate", "frequency"],
        res.eigenvalues.iter().map(|(w, ev)| {
            let wavelength = if *w > 0.0 { std::f64::consts::TAU / w } else { f64::INFINITY };
            vec![*w, wavelength, ev[0].re, ev[0].im]
        }),
    )?;
    let (fastest_omega, fastest_rate) = fastest_growth(&cfg.params);
    let report = CrowReport {
        omega_threshold: res.omega_threshold,
        lambda_min: res.lambda_min,
        translation_velocity: res.translation_velocity,
        fastest_omega,
        fastest_rate,
    };
    write_json(&out.join("report.json"), &report)?;
    Ok(())
}
