pub mod analyze;
pub mod crow;
pub mod eye;
pub mod pair;
pub mod rndf;
pub mod selfsim;
pub mod sweep;

use std::path::{Path, PathBuf};

use serde::Serialize;
use vortex_core::integrator::{IntegratorConfig, StepReport};
use vortex_core::io::{snapshot_stem, write_json, write_snapshot, IoError, SnapshotMeta};
use vortex_core::{FilamentState, ModelParams};

use crate::config::RunRecord;
use crate::error::CliError;

pub fn prepare(out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out).map_err(|e| CliError::Usage(format!("cannot create {}: {e}", out.display())))
}

pub fn write_record<T: Serialize>(out: &Path, command: &str, config: &T) -> Result<(), CliError> {
    write_json(&out.join("config.json"), &RunRecord::new(command, config))?;
    Ok(())
}

/// Writes snapshots under `<out>/snapshots`, remembering the first failure so
/// it can be raised once the solver returns.
pub struct SnapshotSink<'a, T: Serialize> {
    dir: PathBuf,
    params: ModelParams,
    integrator: IntegratorConfig,
    run: &'a T,
    pub error: Option<IoError>,
}

impl<'a, T: Serialize> SnapshotSink<'a, T> {
    pub fn new(out: &Path, params: ModelParams, integrator: IntegratorConfig, run: &'a T) -> Result<Self, CliError> {
        let dir = out.join("snapshots");
        prepare(&dir)?;
        Ok(Self { dir, params, integrator, run, error: None })
    }

    fn meta(&self, state: &FilamentState, tau_next: f64) -> SnapshotMeta {
        SnapshotMeta::new(state, &self.params).with_integrator(&self.integrator, tau_next).with_run(self.run)
    }

    pub fn save(&mut self, state: &FilamentState, report: &StepReport) {
        self.save_as(&snapshot_stem(state.time), state, report.tau_next);
    }

    pub fn save_as(&mut self, stem: &str, state: &FilamentState, tau_next: f64) -> Option<PathBuf> {
        match write_snapshot(&self.dir, stem, state, &self.meta(state, tau_next)) {
            Ok((csv, _)) => Some(csv),
            Err(e) => {
                self.error.get_or_insert(e);
                None
            }
        }
    }

    pub fn finish(self) -> Result<(), CliError> {
        self.error.map_or(Ok(()), |e| Err(e.into()))
    }
}
