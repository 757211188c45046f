use std::path::Path;

use serde::Serialize;
use vortex_core::analysis::DominanceReport;
use vortex_core::experiment::{
    moment_distance, quasi_period, run_eye, shape_distance, trajectory_spectrum, ExperimentError, EyeOutcome, StepStats,
};
use vortex_core::integrator::RunSummary;
use vortex_core::io::{write_json, write_table};
use vortex_core::ModelParams;

use super::{prepare, write_record, SnapshotSink};
use crate::config::{load, EyeConfig, Overrides};
use crate::error::CliError;

/// Shape comparison between the initial eye and the one at half the
/// quasi-period: a rotated copy has a large pointwise distance but nearly
/// equal principal moments.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HalfPeriod {
    pub time: f64,
    pub shape_distance: f64,
    pub moment_distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EyeReport {
    pub final_time: f64,
    pub stats: StepStats,
    pub summary: RunSummary,
    pub quasi_period: Option<f64>,
    pub half_period: Option<HalfPeriod>,
    /// Spectrum of the corner trajectory `x2 + i x3` over one quasi-period.
    pub trajectory_fourier: Option<DominanceReport>,
    /// Spectrum of the impulse `F2 + i F3` over one quasi-period.
    pub impulse_fourier: Option<DominanceReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fourier_error: Option<String>,
}

impl EyeReport {
    pub fn new(cfg: &EyeConfig, outcome: &EyeOutcome) -> Self {
        let rec = &outcome.record;
        let period = quasi_period(rec, cfg.recurrence_after, cfg.recurrence_threshold);
        let half_period = period.and_then(|p| {
            let i =
                rec.times.iter().enumerate().min_by(|a, b| (a.1 - 0.5 * p).abs().total_cmp(&(b.1 - 0.5 * p).abs()))?.0;
            Some(HalfPeriod {
                time: rec.times[i],
                shape_distance: shape_distance(&rec.shapes[0], &rec.shapes[i]),
                moment_distance: moment_distance(&rec.shapes[0], &rec.shapes[i]),
            })
        });
        let mut report = Self {
            final_time: outcome.final_state.time,
            stats: outcome.stats,
            summary: outcome.summary,
            quasi_period: period,
            half_period,
            trajectory_fourier: None,
            impulse_fourier: None,
            fourier_error: None,
        };
        if let Some(p) = period {
            let spectrum = |values| {
                trajectory_spectrum(&rec.times, values, (1, 2), 0.0, p, cfg.fourier_samples, cfg.fourier_max_k)
            };
            match (spectrum(&rec.corner), spectrum(&rec.impulse)) {
                (Ok(a), Ok(b)) => {
                    report.trajectory_fourier = Some(a);
                    report.impulse_fourier = Some(b);
                }
                (Err(e), _) | (_, Err(e)) => report.fourier_error = Some(e.to_string()),
            }
        }
        report
    }
}

pub fn run(config: Option<&Path>, overrides: &Overrides, out: &Path) -> Result<(), CliError> {
    let mut cfg: EyeConfig = load(config)?;
    cfg.apply(overrides)?;
    prepare(out)?;
    write_record(out, "eye", &cfg)?;
    let mut sink = SnapshotSink::new(out, ModelParams::lia(), cfg.run.integrator, &cfg)?;
    let outcome = match run_eye(&cfg.run, |s, r| sink.save(s, r)) {
        Ok(o) => o,
        Err(ExperimentError::Run(e)) => {
            let snapshot = sink.save_as("failure", &e.last_state, e.summary.tau_next);
            sink.finish()?;
            return Err(CliError::Solver { message: e.to_string(), snapshot });
        }
        Err(e) => return Err(e.into()),
    };
    sink.finish()?;
    let rec = &outcome.record;
    write_table(
        &out.join("corner.csv"),
        &["t", "x1", "x2", "x3", "F1", "F2", "F3"],
        (0..rec.times.len()).map(|i| {
            let (c, f) = (rec.corner[i], rec.impulse[i]);
            vec![rec.times[i], c.x, c.y, c.z, f.x, f.y, f.z]
        }),
    )?;
    write_json(&out.join("report.json"), &EyeReport::new(&cfg, &outcome))?;
    Ok(())
}
