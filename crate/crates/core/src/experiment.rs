//! Run drivers shared by the command-line tool and the test suites.
//!
//! A pair run integrates the perturbed pair and samples the fluid impulse
//! around the gap, the gap itself and the tangent ratio on a regular time
//! grid. An eye run integrates the eye-shaped vortex under pure local
//! induction and records the corner trajectory and shape samples from which
//! the quasi-period is estimated.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::impulse::{fluid_impulse, FluidImpulseSeries, Origin};
use crate::analysis::separation::{gap_center, separation};
use crate::analysis::spectrum::{detrend, fourier_square_dominance, power_spectrum, resample_uniform, DominanceReport};
use crate::analysis::tangent_ratio::max_tangent_ratio;
use crate::analysis::AnalysisError;
use crate::geometry::{init_eye, init_pair, FilamentState, GeometryError, Grid, ModelParams, Vec3, WhiteNoise};
use crate::integrator::{run, FilamentView, IntegratorConfig, RunError, RunSummary, Schedule, StepReport};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Run(#[from] Box<RunError>),
}

/// Diagnostics sampled along a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub impulse: Vec<Vec3>,
    pub separation: Vec<f64>,
    pub max_t1_ratio: Vec<f64>,
    /// Node at which the impulse window was centred.
    pub centers: Vec<usize>,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn impulse_series(&self, fraction: f64) -> FluidImpulseSeries {
        FluidImpulseSeries {
            times: self.times.clone(),
            values: self.impulse.clone(),
            fraction,
            centers: self.centers.clone(),
        }
    }

    pub fn impulse_component(&self, axis: usize) -> Vec<f64> {
        self.impulse.iter().map(|v| v[axis]).collect()
    }
}

/// Step statistics gathered by the drivers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub steps: u64,
    pub rejections: u64,
    pub tau_min_used: f64,
    pub tau_max_used: f64,
    /// Largest relative modulus deviation seen before renormalization.
    pub max_drift_before: f64,
    /// Largest relative modulus deviation left after renormalization.
    pub max_drift_after: f64,
    /// Largest accepted step relative to the guard cap in force.
    pub max_tau_over_cap: f64,
}

impl StepStats {
    fn record(&mut self, r: &StepReport) {
        if self.steps == 0 {
            self.tau_min_used = r.tau;
        }
        self.steps += 1;
        self.tau_min_used = self.tau_min_used.min(r.tau);
        self.tau_max_used = self.tau_max_used.max(r.tau);
        if let Some(d) = r.drift {
            self.max_drift_before = self.max_drift_before.max(d.before);
            self.max_drift_after = self.max_drift_after.max(d.after);
        }
        if r.cap.is_finite() && r.cap > 0.0 {
            self.max_tau_over_cap = self.max_tau_over_cap.max(r.tau / r.cap);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PairRunConfig {
    pub params: ModelParams,
    pub n_nodes: usize,
    pub extent: f64,
    pub noise: Option<WhiteNoise>,
    pub integrator: IntegratorConfig,
    pub t_end: f64,
    /// Times at which full snapshots are handed to the caller.
    pub snapshot_times: Vec<f64>,
    /// Spacing of the diagnostic samples; zero records every step.
    pub sample_interval: f64,
    /// Impulse window as a fraction of the perimeter.
    pub impulse_fraction: f64,
}

impl Default for PairRunConfig {
    fn default() -> Self {
        let params = ModelParams::reconnection(0.05, 5e-3).expect("valid reference parameters");
        Self {
            params,
            n_nodes: 1500,
            extent: std::f64::consts::TAU,
            noise: None,
            integrator: IntegratorConfig::with_tol(1e-8),
            t_end: 1.1,
            snapshot_times: Vec::new(),
            sample_interval: 1e-4,
            impulse_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairOutcome {
    pub final_state: FilamentState,
    pub series: TimeSeries,
    pub stats: StepStats,
    pub summary: RunSummary,
}

struct Sampler {
    interval: f64,
    next: f64,
}

impl Sampler {
    fn new(t0: f64, interval: f64) -> Self {
        Self { interval, next: t0 }
    }

    fn due(&mut self, t: f64) -> bool {
        if t + 1e-12 * t.abs().max(1.0) < self.next {
            return false;
        }
        if self.interval > 0.0 {
            while self.next <= t + 1e-12 * t.abs().max(1.0) {
                self.next += self.interval;
            }
        }
        true
    }
}

fn pair_sample(series: &mut TimeSeries, t: f64, positions: &[Vec3], tangents: &[Vec3], h: f64, fraction: f64) {
    let center = gap_center(positions);
    series.times.push(t);
    series.impulse.push(fluid_impulse(positions, tangents, h, center, fraction, Origin::WindowCenter));
    series.separation.push(separation(positions));
    series.max_t1_ratio.push(max_tangent_ratio(tangents));
    series.centers.push(center);
}

pub fn initial_pair(cfg: &PairRunConfig) -> Result<FilamentState, ExperimentError> {
    let grid = Grid::new(cfg.n_nodes, cfg.extent)?;
    Ok(init_pair(&grid, &cfg.params, cfg.noise.as_ref())?)
}

/// Integrate the pair from its initial configuration.
pub fn run_pair<F>(cfg: &PairRunConfig, on_snapshot: F) -> Result<PairOutcome, ExperimentError>
where
    F: FnMut(&FilamentState, &StepReport),
{
    let state = initial_pair(cfg)?;
    continue_pair(cfg, &state, None, on_snapshot)
}

/// Integrate the pair from `state` (for example a restart snapshot) to
/// `cfg.t_end`.
pub fn continue_pair<F>(
    cfg: &PairRunConfig,
    state: &FilamentState,
    tau_start: Option<f64>,
    mut on_snapshot: F,
) -> Result<PairOutcome, ExperimentError>
where
    F: FnMut(&FilamentState, &StepReport),
{
    let h = state.grid.spacing();
    let mut series = TimeSeries::default();
    let mut stats = StepStats::default();
    let mut sampler = Sampler::new(state.time, cfg.sample_interval);
    if sampler.due(state.time) {
        pair_sample(&mut series, state.time, &state.positions, &state.tangents, h, cfg.impulse_fraction);
    }
    let mut schedule = Schedule::with_outputs(cfg.t_end, cfg.snapshot_times.clone());
    schedule.tau_start = tau_start;
    let (final_state, summary) = run(state, &cfg.params, &cfg.integrator, &schedule, |r, v: &FilamentView<'_>| {
        stats.record(r);
        if sampler.due(r.t) {
            pair_sample(&mut series, r.t, v.positions, v.tangents, h, cfg.impulse_fraction);
        }
        if r.output.is_some() {
            on_snapshot(&v.to_state(), r);
        }
    })
    .map_err(Box::new)?;
    stats.rejections = summary.rejections;
    Ok(PairOutcome { final_state, series, stats, summary })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EyeRunConfig {
    pub b: f64,
    pub theta: f64,
    pub n_nodes: usize,
    pub integrator: IntegratorConfig,
    pub t_end: f64,
    pub snapshot_times: Vec<f64>,
    /// Spacing of corner and shape samples.
    pub sample_interval: f64,
    pub impulse_fraction: f64,
}

impl Default for EyeRunConfig {
    fn default() -> Self {
        Self {
            b: 0.4,
            theta: std::f64::consts::PI / 6.0,
            n_nodes: 600,
            integrator: IntegratorConfig::with_tol(1e-8),
            t_end: 4.0,
            snapshot_times: Vec::new(),
            sample_interval: 2e-3,
            impulse_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EyeRecord {
    pub times: Vec<f64>,
    /// Position of the corner node (node 0).
    pub corner: Vec<Vec3>,
    pub impulse: Vec<Vec3>,
    /// Shape samples: centroid-subtracted node positions.
    pub shapes: Vec<Vec<Vec3>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EyeOutcome {
    pub final_state: FilamentState,
    pub record: EyeRecord,
    pub stats: StepStats,
    pub summary: RunSummary,
}

fn centered(positions: &[Vec3]) -> Vec<Vec3> {
    let c = positions.iter().sum::<Vec3>() / positions.len() as f64;
    positions.iter().map(|p| p - c).collect()
}

pub fn run_eye<F>(cfg: &EyeRunConfig, mut on_snapshot: F) -> Result<EyeOutcome, ExperimentError>
where
    F: FnMut(&FilamentState, &StepReport),
{
    let grid = Grid::periodic(cfg.n_nodes)?;
    let state = init_eye(&grid, cfg.b, cfg.theta)?;
    let params = ModelParams::lia();
    let h = grid.spacing();
    let mut record = EyeRecord::default();
    let mut stats = StepStats::default();
    let sample = |t: f64, positions: &[Vec3], tangents: &[Vec3], record: &mut EyeRecord| {
        record.times.push(t);
        record.corner.push(positions[0]);
        record.impulse.push(fluid_impulse(positions, tangents, h, 0, cfg.impulse_fraction, Origin::WindowCenter));
        record.shapes.push(centered(positions));
    };
    let mut sampler = Sampler::new(0.0, cfg.sample_interval);
    sampler.due(0.0);
    sample(0.0, &state.positions, &state.tangents, &mut record);
    let schedule = Schedule::with_outputs(cfg.t_end, cfg.snapshot_times.clone());
    let (final_state, summary) = run(&state, &params, &cfg.integrator, &schedule, |r, v: &FilamentView<'_>| {
        stats.record(r);
        if sampler.due(r.t) {
            sample(r.t, v.positions, v.tangents, &mut record);
        }
        if r.output.is_some() {
            on_snapshot(&v.to_state(), r);
        }
    })
    .map_err(Box::new)?;
    stats.rejections = summary.rejections;
    Ok(EyeOutcome { final_state, record, stats, summary })
}

/// Discrete L² distance `√(h Σ |a_j - b_j|²)` between two curves sampled
/// on the same grid.
pub fn curve_distance(a: &FilamentState, b: &FilamentState) -> Result<f64, ExperimentError> {
    if a.grid != b.grid {
        return Err(ExperimentError::Geometry(GeometryError::Shape { expected: a.len(), got: b.len() }));
    }
    let sum: f64 = a.positions.iter().zip(&b.positions).map(|(p, q)| (p - q).norm_squared()).sum();
    Ok((a.grid.spacing() * sum).sqrt())
}

/// Root-mean-square distance between two centred shapes, relative to the
/// RMS size of the first.
pub fn shape_distance(a: &[Vec3], b: &[Vec3]) -> f64 {
    let size: f64 = a.iter().map(|p| p.norm_squared()).sum();
    let diff: f64 = a.iter().zip(b).map(|(p, q)| (p - q).norm_squared()).sum();
    (diff / size).sqrt()
}

/// Rotation-invariant shape distance: compares the sorted principal moments
/// of the centred point sets.
pub fn moment_distance(a: &[Vec3], b: &[Vec3]) -> f64 {
    let moments = |s: &[Vec3]| {
        let m = s.iter().fold(nalgebra::Matrix3::zeros(), |acc, p| acc + p * p.transpose()) / s.len() as f64;
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    };
    let (ma, mb) = (moments(a), moments(b));
    let scale: f64 = ma.iter().sum();
    ma.iter().zip(&mb).map(|(x, y)| (x - y).abs()).sum::<f64>() / scale
}

/// First time after `min_time` at which the shape distance to the initial
/// shape has a local minimum below `threshold`, refined by a parabola
/// through the neighbouring samples.
pub fn quasi_period(record: &EyeRecord, min_time: f64, threshold: f64) -> Option<f64> {
    let first = record.shapes.first()?;
    let d: Vec<f64> = record.shapes.iter().map(|s| shape_distance(first, s)).collect();
    for i in 1..d.len().saturating_sub(1) {
        if record.times[i] < min_time {
            continue;
        }
        if d[i] <= d[i - 1] && d[i] <= d[i + 1] && d[i] < threshold {
            let (t0, t1, t2) = (record.times[i - 1], record.times[i], record.times[i + 1]);
            let denom = d[i - 1] - 2.0 * d[i] + d[i + 1];
            let shift = if denom > 0.0 { 0.5 * (d[i - 1] - d[i + 1]) / denom } else { 0.0 };
            let step = if shift >= 0.0 { t2 - t1 } else { t1 - t0 };
            return Some(t1 + shift * step);
        }
    }
    None
}

/// Square-index dominance of a planar trajectory over one period.
///
/// The components `axes` of `values` are resampled on `samples` uniform
/// points of `[t0, t0 + period)`, detrended so the record closes up, and
/// combined into the complex signal `v[a] + i v[b]` whose spectrum is
/// examined at indices `k²`.
pub fn trajectory_spectrum(
    times: &[f64],
    values: &[Vec3],
    axes: (usize, usize),
    t0: f64,
    period: f64,
    samples: usize,
    max_k: usize,
) -> Result<DominanceReport, AnalysisError> {
    let comp = |axis: usize| -> Result<Vec<f64>, AnalysisError> {
        let v: Vec<f64> = values.iter().map(|p| p[axis]).collect();
        Ok(detrend(&resample_uniform(times, &v, t0, t0 + period, samples)?))
    };
    let (re, im) = (comp(axes.0)?, comp(axes.1)?);
    let z: Vec<Complex64> = re.iter().zip(&im).map(|(a, b)| Complex64::new(*a, *b)).collect();
    Ok(fourier_square_dominance(&power_spectrum(&[z]), 1, max_k))
}
