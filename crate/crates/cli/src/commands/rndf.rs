use std::f64::consts::TAU;
use std::path::Path;

use serde::Serialize;
use vortex_core::analysis::rndf::{rndf, rndf_samples, Rndf};
use vortex_core::analysis::spectrum::power_spectrum;
use vortex_core::analysis::{fourier_square_dominance, rational_probe, DominanceReport, ProbeMarker};
use vortex_core::io::{write_json, write_table};

use super::{prepare, write_record};
use crate::config::{load, RndfConfig};
use crate::error::CliError;

#[derive(Debug, Serialize)]
struct RndfReport {
    at_zero: Rndf,
    at_pi: Rndf,
    fourier: DominanceReport,
    probe: Vec<ProbeMarker>,
}

pub fn run(config: Option<&Path>, out: &Path) -> Result<(), CliError> {
    let cfg: RndfConfig = load(config)?;
    if cfg.terms == 0 || cfg.samples < 4 {
        return Err(CliError::Usage("rndf needs terms >= 1 and samples >= 4".into()));
    }
    prepare(out)?;
    write_record(out, "rndf", &cfg)?;
    let samples = rndf_samples(cfg.samples, TAU, cfg.terms);
    write_table(
        &out.join("rndf.csv"),
        &["t", "re", "im", "abs"],
        samples.iter().map(|(t, z)| vec![*t, z.re, z.im, z.norm()]),
    )?;
    let power = power_spectrum(&[samples.iter().map(|s| s.1).collect()]);
    let times: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let modulus: Vec<f64> = samples.iter().map(|s| s.1.norm()).collect();
    let report = RndfReport {
        at_zero: rndf(0.0, cfg.terms),
        at_pi: rndf(std::f64::consts::PI, cfg.terms),
        fourier: fourier_square_dominance(&power, 1, (cfg.terms as f64).sqrt() as usize),
        probe: rational_probe(&times, &modulus, cfg.t_star, &cfg.rationals, cfg.probe_half_width),
    };
    write_json(&out.join("report.json"), &report)?;
    Ok(())
}
