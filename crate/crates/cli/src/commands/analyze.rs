use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Serialize;
use serde_json::{json, Map, Value};
use vortex_core::analysis::spectrum::power_spectrum;
use vortex_core::analysis::{
    crow_analysis, detect_reconnection, dominant_mode, fit_power_law, fourier_square_dominance, rational_probe,
    tangent_ratio,
};
use vortex_core::experiment::trajectory_spectrum;
use vortex_core::io::{column, read_json, read_snapshot, read_table, read_timeseries, write_json};
use vortex_core::{FilamentState, Vec3};

use super::prepare;
use crate::config::{PairConfig, RndfConfig, RunRecord};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Analysis {
    /// Onset of oscillation in the fluid impulse.
    Detector,
    /// Power law of the gap after the detected onset.
    Separation,
    /// Drift of the mean x2 across the stored snapshots.
    Velocity,
    /// Linear stability with the stored parameters and the dominant mode of
    /// the latest snapshot.
    Crow,
    /// Square-index dominance of a trajectory spectrum.
    Fourier,
    /// Extrema at rational multiples of a reference time.
    Probe,
    /// Tangent-ratio bound on every stored snapshot.
    Tangent,
}

/// Local maximum of the eye impulse modulus used as the probe reference.
const EYE_PROBE_TIME: f64 = 0.10848;
const EYE_PROBE_RATIONALS: [(u32, u32); 6] = [(3, 11), (1, 3), (3, 7), (3, 5), (1, 1), (1, 2)];

fn data(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

fn supported(command: &str) -> &'static [Analysis] {
    use Analysis::*;
    match command {
        "pair" => &[Detector, Separation, Velocity, Crow, Tangent],
        "eye" => &[Fourier, Probe, Tangent],
        "rndf" => &[Fourier, Probe],
        _ => &[],
    }
}

fn snapshots(input: &Path) -> Result<Vec<(FilamentState, vortex_core::io::SnapshotMeta)>, CliError> {
    let dir = input.join("snapshots");
    let entries = std::fs::read_dir(&dir).map_err(|e| data(format!("{}: {e}", dir.display())))?;
    let mut stems: Vec<String> = entries
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let p = e.path();
            (p.extension()? == "json").then(|| p.file_stem()?.to_str().map(str::to_string))?
        })
        .filter(|s| s != "failure")
        .collect();
    stems.sort();
    let mut out = Vec::with_capacity(stems.len());
    for stem in stems {
        out.push(read_snapshot(&dir, &stem)?);
    }
    out.sort_by(|a, b| a.0.time.total_cmp(&b.0.time));
    Ok(out)
}

/// Least-squares slope of `ys` against `xs`.
fn slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    (xs.len() >= 2 && sxx > 0.0).then(|| sxy / sxx)
}

struct Inputs {
    dir: PathBuf,
    command: String,
    config: Value,
}

impl Inputs {
    fn pair_config(&self) -> Result<PairConfig, CliError> {
        serde_json::from_value(self.config.clone()).map_err(|e| data(format!("config.json: {e}")))
    }

    fn detector(&self) -> Result<Value, CliError> {
        let cfg = self.pair_config()?;
        let series = read_timeseries(&self.dir.join("timeseries.csv"))?;
        let values = series.impulse_component(cfg.detector_component);
        Ok(match detect_reconnection(&series.times, &values, &cfg.detector) {
            Ok(d) => json!({ "component": cfg.detector_component, "time": d.time, "resolution": d.resolution }),
            Err(e) => json!({ "component": cfg.detector_component, "error": e.to_string() }),
        })
    }

    fn separation(&self) -> Result<Value, CliError> {
        let cfg = self.pair_config()?;
        let series = read_timeseries(&self.dir.join("timeseries.csv"))?;
        let values = series.impulse_component(cfg.detector_component);
        let onset = match detect_reconnection(&series.times, &values, &cfg.detector) {
            Ok(d) => d.time,
            Err(e) => return Ok(json!({ "error": e.to_string() })),
        };
        let end = onset + cfg.separation_window;
        let (t, v): (Vec<f64>, Vec<f64>) =
            series.times.iter().zip(&series.separation).filter(|(t, _)| **t <= end).map(|(t, v)| (*t, *v)).unzip();
        Ok(match fit_power_law(&t, &v, onset) {
            Ok(fit) => json!({ "onset": onset, "window": cfg.separation_window, "fit": fit }),
            Err(e) => json!({ "onset": onset, "error": e.to_string() }),
        })
    }

    fn velocity(&self) -> Result<Value, CliError> {
        let snaps = snapshots(&self.dir)?;
        let times: Vec<f64> = snaps.iter().map(|s| s.0.time).collect();
        let means: Vec<f64> =
            snaps.iter().map(|s| s.0.positions.iter().map(|p| p.y).sum::<f64>() / s.0.len() as f64).collect();
        let measured =
            slope(&times, &means).ok_or_else(|| data("velocity fit needs two snapshots at distinct times"))?;
        let expected = snaps[0].1.params.translation_velocity();
        Ok(json!({
            "measured": measured,
            "expected": expected,
            "relative_error": ((measured - expected) / expected).abs(),
            "snapshots": snaps.len(),
        }))
    }

    fn crow(&self) -> Result<Value, CliError> {
        let cfg = self.pair_config()?;
        let res = crow_analysis(&cfg.run.params, &[]).map_err(data)?;
        // strongest transverse mode of the latest stored curve
        let dominant = match snapshots(&self.dir)?.last() {
            Some((state, _)) => match dominant_mode(&state.positions, state.grid.extent()) {
                Ok(m) => json!({ "time": state.time, "mode": m.mode, "wavelength": m.wavelength,
                                  "power_fraction": m.power_fraction }),
                Err(e) => json!({ "time": state.time, "error": e.to_string() }),
            },
            None => Value::Null,
        };
        Ok(json!({
            "omega_threshold": res.omega_threshold,
            "lambda_min": res.lambda_min,
            "translation_velocity": res.translation_velocity,
            "dominant": dominant,
        }))
    }

    fn tangent(&self) -> Result<Value, CliError> {
        let mut rows = Vec::new();
        for (state, meta) in snapshots(&self.dir)? {
            rows.push(match tangent_ratio(&state.positions, &state.tangents, meta.params.epsilon) {
                Ok(r) => json!({ "time": state.time, "max_ratio": r.max_ratio, "bound": r.bound,
                                  "satisfied": r.satisfies_bound(), "degenerate": r.degenerate }),
                Err(e) => json!({ "time": state.time, "error": e.to_string() }),
            });
        }
        Ok(Value::Array(rows))
    }

    fn fourier(&self) -> Result<Value, CliError> {
        if self.command == "rndf" {
            let path = self.dir.join("rndf.csv");
            let table = read_table(&path)?;
            let (re, im) = (column(&path, &table, "re")?, column(&path, &table, "im")?);
            let z = re.iter().zip(im).map(|(a, b)| vortex_core::Complex64::new(*a, *b)).collect();
            let terms = serde_json::from_value::<RndfConfig>(self.config.clone()).map_err(data)?.terms;
            let rep = fourier_square_dominance(&power_spectrum(&[z]), 1, (terms as f64).sqrt() as usize);
            return serde_json::to_value(rep).map_err(data);
        }
        let report: Value = read_json(&self.dir.join("report.json"))?;
        let period = report["quasi_period"].as_f64().ok_or_else(|| data("report.json has no quasi_period"))?;
        let path = self.dir.join("corner.csv");
        let table = read_table(&path)?;
        let t = column(&path, &table, "t")?;
        let vec3 = |a: &str, b: &str, c: &str| -> Result<Vec<Vec3>, CliError> {
            let (x, y, z) = (column(&path, &table, a)?, column(&path, &table, b)?, column(&path, &table, c)?);
            Ok((0..x.len()).map(|i| Vec3::new(x[i], y[i], z[i])).collect())
        };
        let spectrum = |v: &[Vec3]| trajectory_spectrum(t, v, (1, 2), 0.0, period, 1024, 12).map_err(data);
        Ok(json!({
            "period": period,
            "trajectory": spectrum(&vec3("x1", "x2", "x3")?)?,
            "impulse": spectrum(&vec3("F1", "F2", "F3")?)?,
        }))
    }

    fn probe(&self) -> Result<Value, CliError> {
        let (path, t_star, rationals, half_width) = if self.command == "rndf" {
            let cfg: RndfConfig = serde_json::from_value(self.config.clone()).map_err(data)?;
            (self.dir.join("rndf.csv"), cfg.t_star, cfg.rationals, cfg.probe_half_width)
        } else {
            (self.dir.join("corner.csv"), EYE_PROBE_TIME, EYE_PROBE_RATIONALS.to_vec(), 0.004)
        };
        let table = read_table(&path)?;
        let t = column(&path, &table, "t")?;
        let modulus: Vec<f64> = if self.command == "rndf" {
            column(&path, &table, "abs")?.to_vec()
        } else {
            let (f2, f3) = (column(&path, &table, "F2")?, column(&path, &table, "F3")?);
            f2.iter().zip(f3).map(|(a, b)| a.hypot(*b)).collect()
        };
        serde_json::to_value(rational_probe(t, &modulus, t_star, &rationals, half_width)).map_err(data)
    }
}

pub fn run(input: &Path, what: &[Analysis], out: &Path) -> Result<(), CliError> {
    let record: RunRecord<Value> = read_json(&input.join("config.json"))?;
    let allowed = supported(&record.command);
    if allowed.is_empty() {
        return Err(data(format!("nothing to analyse for command {:?}", record.command)));
    }
    let requested: Vec<Analysis> = if what.is_empty() { allowed.to_vec() } else { what.to_vec() };
    if let Some(bad) = requested.iter().find(|a| !allowed.contains(a)) {
        return Err(CliError::Usage(format!("{bad:?} does not apply to a {} run", record.command)));
    }
    let inputs = Inputs { dir: input.to_path_buf(), command: record.command.clone(), config: record.config };
    let mut results = Map::new();
    for a in requested {
        let value = match a {
            Analysis::Detector => inputs.detector()?,
            Analysis::Separation => inputs.separation()?,
            Analysis::Velocity => inputs.velocity()?,
            Analysis::Crow => inputs.crow()?,
            Analysis::Fourier => inputs.fourier()?,
            Analysis::Probe => inputs.probe()?,
            Analysis::Tangent => inputs.tangent()?,
        };
        results.insert(serde_json::to_value(a).map_err(data)?.as_str().unwrap_or("?").to_string(), value);
    }
    prepare(out)?;
    write_json(
        &out.join("analysis.json"),
        &json!({ "input": input, "command": record.command, "version": record.version, "results": results }),
    )?;
    Ok(())
}
