use std::path::Path;

use serde::Serialize;
use vortex_core::analysis::{detect_reconnection, fit_power_law, tangent_ratio, Detection, PowerFit, TangentRatio};
use vortex_core::experiment::{continue_pair, initial_pair, ExperimentError, PairOutcome, StepStats};
use vortex_core::integrator::RunSummary;
use vortex_core::io::{snapshot_stem, write_json, write_timeseries};

use super::{prepare, write_record, SnapshotSink};
use crate::config::{load, Overrides, PairConfig};
use crate::error::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct PairReport {
    pub final_time: f64,
    pub stats: StepStats,
    pub summary: RunSummary,
    pub detection: Option<Detection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detection_error: Option<String>,
    /// Power law of the gap against the time since the detected onset.
    pub separation_fit: Option<PowerFit>,
    pub final_tangent_ratio: Option<TangentRatio>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tangent_ratio_error: Option<String>,
}

impl PairReport {
    pub fn new(cfg: &PairConfig, outcome: &PairOutcome) -> Self {
        let series = &outcome.series;
        let values = series.impulse_component(cfg.detector_component);
        let (detection, detection_error) = match detect_reconnection(&series.times, &values, &cfg.detector) {
            Ok(d) => (Some(d), None),
            Err(e) => (None, Some(e.to_string())),
        };
        let separation_fit = detection.and_then(|d| {
            let end = d.time + cfg.separation_window;
            let (t, v): (Vec<f64>, Vec<f64>) =
                series.times.iter().zip(&series.separation).filter(|(t, _)| **t <= end).map(|(t, v)| (*t, *v)).unzip();
            fit_power_law(&t, &v, d.time).ok()
        });
        let st = &outcome.final_state;
        let (final_tangent_ratio, tangent_ratio_error) =
            match tangent_ratio(&st.positions, &st.tangents, cfg.run.params.epsilon) {
                Ok(r) => (Some(r), None),
                Err(e) => (None, Some(e.to_string())),
            };
        Self {
            final_time: st.time,
            stats: outcome.stats,
            summary: outcome.summary,
            detection,
            detection_error,
            separation_fit,
            final_tangent_ratio,
            tangent_ratio_error,
        }
    }
}

pub fn run(config: Option<&Path>, overrides: &Overrides, out: &Path) -> Result<(), CliError> {
    let mut cfg: PairConfig = load(config)?;
    cfg.apply(overrides)?;
    prepare(out)?;
    execute(&cfg, out).map(|_| ())
}

/// Run one pair simulation into `out` and write its outputs.
pub fn execute(cfg: &PairConfig, out: &Path) -> Result<PairReport, CliError> {
    write_record(out, "pair", cfg)?;
    let mut sink = SnapshotSink::new(out, cfg.run.params, cfg.run.integrator, cfg)?;
    let initial = initial_pair(&cfg.run)?;
    sink.save_as(&snapshot_stem(initial.time), &initial, cfg.run.integrator.tau_init);
    match continue_pair(&cfg.run, &initial, None, |s, r| sink.save(s, r)) {
        Ok(outcome) => {
            let last = &outcome.final_state;
            sink.save_as(&snapshot_stem(last.time), last, outcome.summary.tau_next);
            sink.finish()?;
            write_timeseries(&out.join("timeseries.csv"), &outcome.series)?;
            let report = PairReport::new(cfg, &outcome);
            write_json(&out.join("report.json"), &report)?;
            Ok(report)
        }
        Err(ExperimentError::Run(e)) => {
            let snapshot = sink.save_as("failure", &e.last_state, e.summary.tau_next);
            sink.finish()?;
            Err(CliError::Solver { message: e.to_string(), snapshot })
        }
        Err(e) => Err(e.into()),
    }
}
