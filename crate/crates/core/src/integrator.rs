//! Adaptive embedded Runge-Kutta-Fehlberg stepping.
//!
//! The stepper is generic over [`OdeSystem`]; the filament model plugs in
//! through [`FilamentSystem`], which adds the tangent renormalization after
//! every accepted step and the step-size guard. The semi-implicit scheme for
//! the reduced model lives here too since it is only used to validate the
//! stability bound.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{renormalize_in_place, DynamicsError, FilamentRhs, ModulusDrift, ReducedState};
use crate::geometry::{FilamentState, ModelParams, Vec3};
use crate::stencil::{DerivativeOrder, DiffOperator};

/// Six-stage embedded pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ButcherTableau {
    pub alphas: [f64; 6],
    /// Row `i` holds the `i` coefficients of stage `i` (row 0 is empty).
    pub betas: [[f64; 5]; 6],
    /// Fourth-order weights.
    pub c: [f64; 6],
    /// Fifth-order weights.
    pub c_hat: [f64; 6],
}

pub const FEHLBERG_45: ButcherTableau = ButcherTableau {
    alphas: [0.0, 2.0 / 9.0, 1.0 / 3.0, 3.0 / 4.0, 1.0, 5.0 / 6.0],
    betas: [
        [0.0; 5],
        [2.0 / 9.0, 0.0, 0.0, 0.0, 0.0],
        [1.0 / 12.0, 1.0 / 4.0, 0.0, 0.0, 0.0],
        [69.0 / 128.0, -243.0 / 128.0, 135.0 / 64.0, 0.0, 0.0],
        [-17.0 / 12.0, 27.0 / 4.0, -27.0 / 5.0, 16.0 / 15.0, 0.0],
        [65.0 / 432.0, -5.0 / 16.0, 13.0 / 16.0, 4.0 / 27.0, 5.0 / 144.0],
    ],
    c: [1.0 / 9.0, 0.0, 9.0 / 20.0, 16.0 / 45.0, 1.0 / 12.0, 0.0],
    c_hat: [47.0 / 450.0, 0.0, 12.0 / 25.0, 32.0 / 225.0, 1.0 / 30.0, 6.0 / 25.0],
};

impl ButcherTableau {
    pub const STAGES: usize = 6;

    /// Largest violation of `Σ_l β_il = α_i`, `Σ c = 1`, `Σ ĉ = 1`.
    pub fn consistency_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..Self::STAGES {
            let row: f64 = self.betas[i][..i].iter().sum();
            worst = worst.max((row - self.alphas[i]).abs());
        }
        worst = worst.max((self.c.iter().sum::<f64>() - 1.0).abs());
        worst.max((self.c_hat.iter().sum::<f64>() - 1.0).abs())
    }

    pub fn weights(&self, row: SolutionRow) -> &[f64; 6] {
        match row {
            SolutionRow::Fourth => &self.c,
            SolutionRow::Fifth => &self.c_hat,
        }
    }
}

/// Which weight row propagates the solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolutionRow {
    #[default]
    Fourth,
    Fifth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub tau_init: f64,
    pub tau_min: f64,
    pub tau_max: f64,
    pub safety: f64,
    /// Largest factor by which a step may grow after an acceptance.
    pub max_growth: f64,
    pub stability_guard: bool,
    /// Fraction of the explicit dispersion limit of the highest grid mode
    /// allowed when the guard is on; `None` disables this part of the guard.
    pub dispersion_limit: Option<f64>,
    pub max_steps: u64,
    pub solution_row: SolutionRow,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-8,
            rel_tol: 1e-8,
            tau_init: 1e-7,
            tau_min: 1e-14,
            tau_max: 1e-2,
            safety: 0.9,
            max_growth: 5.0,
            stability_guard: true,
            dispersion_limit: Some(0.25),
            max_steps: 50_000_000,
            solution_row: SolutionRow::Fourth,
        }
    }
}

impl IntegratorConfig {
    /// Same tolerance for the absolute and relative parts.
    pub fn with_tol(tol: f64) -> Self {
        Self { abs_tol: tol, rel_tol: tol, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), IntegratorError> {
        let bad = |msg: &str| Err(IntegratorError::InvalidConfig(msg.to_string()));
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.tau_min > 0.0 && self.tau_min <= self.tau_init && self.tau_init <= self.tau_max) {
            return bad("step bounds must satisfy 0 < tau_min <= tau_init <= tau_max");
        }
        if !(self.safety > 0.0 && self.safety < 1.0) {
            return bad("safety factor must lie in (0, 1)");
        }
        if !(self.max_growth > 1.0) {
            return bad("max_growth must exceed 1");
        }
        if let Some(l) = self.dispersion_limit {
            if !(l > 0.0 && l.is_finite()) {
                return bad("dispersion_limit must be positive");
            }
        }
        Ok(())
    }

    /// Scalar tolerance used to judge per-step quantities such as the
    /// modulus drift.
    pub fn step_tolerance(&self) -> f64 {
        self.abs_tol.max(self.rel_tol)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegratorError {
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error("stage {stage} produced non-finite values")]
    StageBlowup { stage: usize },
    #[error("step size underflow at t = {t} (tau = {tau}) with persistent rejection")]
    StepUnderflow { t: f64, tau: f64 },
    #[error("step limit {steps} reached at t = {t}")]
    MaxSteps { steps: u64, t: f64 },
    #[error(transparent)]
    Rhs(#[from] DynamicsError),
}

/// First-order system `y' = f(t, y)` on a flat state vector.
pub trait OdeSystem {
    fn dim(&self) -> usize;

    fn rhs(&mut self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), DynamicsError>;

    /// Projection applied to each accepted state.
    fn correct(&mut self, _y: &mut [f64]) -> Result<Option<ModulusDrift>, DynamicsError> {
        Ok(None)
    }

    /// Upper bound on the next step from the stability guard.
    fn tau_cap(&self, _y: &[f64]) -> f64 {
        f64::INFINITY
    }
}

/// Fifth-root step controller with growth limit, clamped to the configured
/// bounds and then to `cap`.
pub fn adapt(error_estimate: f64, tau: f64, config: &IntegratorConfig, cap: f64) -> f64 {
    let raw = if error_estimate == 0.0 {
        config.tau_max
    } else {
        (config.safety * tau * error_estimate.powf(-0.2)).min(config.max_growth * tau)
    };
    raw.clamp(config.tau_min, config.tau_max).min(cap)
}

/// Largest stable step of the semi-implicit reduced scheme at the worst
/// grid mode, `h² / √(4 + ε h² (r_c² - x²)/(r_c² + x²)²)` with `x = x1_min`.
///
/// Returns infinity when the radicand is not positive and zero when the
/// interaction is singular (`x1_min = r_c = 0`, `ε > 0`).
pub fn stability_max_tau(h: f64, params: &ModelParams, x1_min: f64) -> f64 {
    let h2 = h * h;
    if params.epsilon == 0.0 {
        return h2 / 2.0;
    }
    let rc2 = params.r_c * params.r_c;
    let x2 = x1_min * x1_min;
    let d = rc2 + x2;
    if d == 0.0 {
        return 0.0;
    }
    let radicand = 4.0 + params.epsilon * h2 * (rc2 - x2) / (d * d);
    if radicand <= 0.0 {
        f64::INFINITY
    } else {
        h2 / radicand.sqrt()
    }
}

/// Whether a single Fourier mode of the semi-implicit reduced scheme stays
/// bounded: the amplification matrix has determinant one, so its
/// eigenvalues lie on the unit circle exactly when
/// `0 <= λζ (λζ + μ) <= 4`, with `λζ` the scaled mode symbol and `μ` the
/// scaled interaction slope.
pub fn km_mode_stable(lambda_zeta: f64, mu: f64) -> bool {
    let a = lambda_zeta * (lambda_zeta + mu);
    (0.0..=4.0).contains(&a)
}

/// Step at which the highest grid mode of the binormal flow reaches
/// `limit` radians per step, for tangents no shorter than `min_modulus`.
pub fn dispersion_max_tau(h: f64, min_modulus: f64, limit: f64) -> f64 {
    let top = DiffOperator::new(DerivativeOrder::Second, 1.0).symbol(std::f64::consts::PI).abs();
    limit * h * h * min_modulus * min_modulus / top
}

/// Reusable stage storage and the core embedded step.
#[derive(Debug, Clone)]
pub struct Stepper {
    config: IntegratorConfig,
    tableau: &'static ButcherTableau,
    k: Vec<Vec<f64>>,
    stage: Vec<f64>,
    proposal: Vec<f64>,
    k1_fresh: bool,
}

/// Outcome of one attempted step; the candidate state is in
/// [`Stepper::proposal`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Attempt {
    pub tau: f64,
    /// Weighted RMS of the difference between the two weight rows; the step
    /// is acceptable when this is at most one.
    pub error: f64,
}

impl Attempt {
    pub fn accepted(&self) -> bool {
        self.error <= 1.0
    }
}

/// Per-step record handed to observers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub step: u64,
    pub t: f64,
    pub tau: f64,
    pub error: f64,
    pub drift: Option<ModulusDrift>,
    /// Index into the output schedule when this step landed on it.
    pub output: Option<usize>,
    pub tau_next: f64,
    pub cap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub t: f64,
    pub tau_next: f64,
    pub steps: u64,
    pub rejections: u64,
}

/// End time and the times at which steps must land exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub t_end: f64,
    pub outputs: Vec<f64>,
    /// First trial step; `None` uses `tau_init`. Restarts pass the stored
    /// proposal here.
    pub tau_start: Option<f64>,
}

impl Schedule {
    pub fn until(t_end: f64) -> Self {
        Self { t_end, outputs: Vec::new(), tau_start: None }
    }

    pub fn with_outputs(t_end: f64, mut outputs: Vec<f64>) -> Self {
        outputs.retain(|t| t.is_finite() && *t <= t_end);
        outputs.sort_by(f64::total_cmp);
        outputs.dedup();
        Self { t_end, outputs, tau_start: None }
    }
}

impl Stepper {
    pub fn new(config: IntegratorConfig, dim: usize) -> Result<Self, IntegratorError> {
        config.validate()?;
        Ok(Self {
            config,
            tableau: &FEHLBERG_45,
            k: vec![vec![0.0; dim]; ButcherTableau::STAGES],
            stage: vec![0.0; dim],
            proposal: vec![0.0; dim],
            k1_fresh: false,
        })
    }

    pub fn config(&self) -> &IntegratorConfig {
        &self.config
    }

    pub fn proposal(&self) -> &[f64] {
        &self.proposal
    }

    /// One embedded step from `(t, y)`. Stage derivatives at `y` are reused
    /// across consecutive calls with the same `y` until [`Self::invalidate`].
    pub fn attempt<S: OdeSystem>(
        &mut self,
        sys: &mut S,
        t: f64,
        y: &[f64],
        tau: f64,
    ) -> Result<Attempt, IntegratorError> {
        let tab = self.tableau;
        if !self.k1_fresh {
            sys.rhs(t, y, &mut self.k[0])?;
            self.k1_fresh = true;
        }
        for i in 1..ButcherTableau::STAGES {
            let beta = &tab.betas[i][..i];
            for (m, s) in self.stage.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (l, b) in beta.iter().enumerate() {
                    acc += b * self.k[l][m];
                }
                *s = y[m] + tau * acc;
            }
            let (done, rest) = self.k.split_at_mut(i);
            let _ = done;
            match sys.rhs(t + tab.alphas[i] * tau, &self.stage, &mut rest[0]) {
                Ok(()) => {}
                Err(DynamicsError::Shape { expected, got }) => {
                    return Err(DynamicsError::Shape { expected, got }.into())
                }
                Err(_) => return Err(IntegratorError::StageBlowup { stage: i }),
            }
            if rest[0].iter().any(|v| !v.is_finite()) {
                return Err(IntegratorError::StageBlowup { stage: i });
            }
        }
        let w = tab.weights(self.config.solution_row);
        let (atol, rtol) = (self.config.abs_tol, self.config.rel_tol);
        let mut sum = 0.0;
        for m in 0..y.len() {
            let mut acc = 0.0;
            let mut diff = 0.0;
            for i in 0..ButcherTableau::STAGES {
                let k = self.k[i][m];
                acc += w[i] * k;
                diff += (tab.c[i] - tab.c_hat[i]) * k;
            }
            let next = y[m] + tau * acc;
            self.proposal[m] = next;
            let scale = atol + rtol * y[m].abs().max(next.abs());
            let e = tau * diff / scale;
            sum += e * e;
        }
        let error = if y.is_empty() { 0.0 } else { (sum / y.len() as f64).sqrt() };
        if !error.is_finite() {
            return Err(IntegratorError::StageBlowup { stage: ButcherTableau::STAGES });
        }
        Ok(Attempt { tau, error })
    }

    /// Mark the cached first-stage derivative stale.
    pub fn invalidate(&mut self) {
        self.k1_fresh = false;
    }

    /// Advance `y` from `t0` to `schedule.t_end`.
    ///
    /// On error `y` holds the last accepted state. Steps are shortened to
    /// land exactly on each scheduled output time; such a shortened step does
    /// not change the controller's proposal, so a restart from an output
    /// with the reported `tau_next` reproduces the uninterrupted run.
    pub fn integrate<S, F>(
        &mut self,
        sys: &mut S,
        t0: f64,
        y: &mut [f64],
        schedule: &Schedule,
        mut observer: F,
    ) -> Result<RunSummary, (IntegratorError, RunSummary)>
    where
        S: OdeSystem,
        F: FnMut(&StepReport, &[f64]),
    {
        let cfg = self.config;
        let mut summary =
            RunSummary { t: t0, tau_next: schedule.tau_start.unwrap_or(cfg.tau_init), steps: 0, rejections: 0 };
        let mut next_out = schedule.outputs.iter().position(|&o| o > t0).unwrap_or(schedule.outputs.len());
        self.invalidate();
        while summary.t < schedule.t_end {
            if summary.steps >= cfg.max_steps {
                return Err((IntegratorError::MaxSteps { steps: summary.steps, t: summary.t }, summary));
            }
            let t = summary.t;
            let cap = if cfg.stability_guard { sys.tau_cap(y) } else { f64::INFINITY };
            let mut tau = summary.tau_next.min(cap).min(cfg.tau_max);
            let (target, output) = match schedule.outputs.get(next_out) {
                Some(&o) if o < schedule.t_end => (o, Some(next_out)),
                _ => (schedule.t_end, None),
            };
            let landing = t + tau >= target;
            if landing {
                tau = target - t;
            }
            let attempt = match self.attempt(sys, t, y, tau) {
                Ok(a) => a,
                Err(IntegratorError::StageBlowup { .. }) => Attempt { tau, error: f64::INFINITY },
                Err(e) => return Err((e, summary)),
            };
            if attempt.accepted() {
                y.copy_from_slice(&self.proposal);
                self.invalidate();
                let drift = sys.correct(y).map_err(|e| (e.into(), summary))?;
                summary.t = if landing { target } else { t + tau };
                if !landing {
                    summary.tau_next = adapt(attempt.error, tau, &cfg, cap);
                }
                summary.steps += 1;
                if landing && output.is_some() {
                    next_out += 1;
                }
                let report = StepReport {
                    step: summary.steps,
                    t: summary.t,
                    tau,
                    error: attempt.error,
                    drift,
                    output: if landing { output } else { None },
                    tau_next: summary.tau_next,
                    cap,
                };
                observer(&report, y);
            } else {
                summary.rejections += 1;
                if tau <= cfg.tau_min {
                    return Err((IntegratorError::StepUnderflow { t, tau }, summary));
                }
                summary.tau_next = if attempt.error.is_finite() {
                    adapt(attempt.error, tau, &cfg, cap)
                } else {
                    (0.2 * tau).max(cfg.tau_min)
                };
            }
        }
        Ok(summary)
    }
}

/// The filament model as a flat ODE system `[X (3n) | T (3n)]`.
#[derive(Debug, Clone)]
pub struct FilamentSystem {
    rhs: FilamentRhs,
    l0: Vec<f64>,
    h: f64,
    dispersion_limit: Option<f64>,
}

impl FilamentSystem {
    pub fn new(state: &FilamentState, params: &ModelParams, config: &IntegratorConfig) -> Self {
        Self {
            rhs: FilamentRhs::new(state, params),
            l0: state.l0.clone(),
            h: state.grid.spacing(),
            dispersion_limit: config.dispersion_limit,
        }
    }

    pub fn params(&self) -> &ModelParams {
        self.rhs.params()
    }

    /// Flatten a state into the layout used by the stepper.
    pub fn pack(state: &FilamentState) -> Vec<f64> {
        let mut y = Vec::with_capacity(6 * state.len());
        y.extend_from_slice(bytemuck::cast_slice(&state.positions));
        y.extend_from_slice(bytemuck::cast_slice(&state.tangents));
        y
    }

    /// Positions and tangents of a packed state.
    pub fn split(y: &[f64]) -> (&[Vec3], &[Vec3]) {
        let (a, b) = y.split_at(y.len() / 2);
        (bytemuck::cast_slice(a), bytemuck::cast_slice(b))
    }

    pub fn unpack(y: &[f64], template: &FilamentState, time: f64) -> FilamentState {
        let (x, t) = Self::split(y);
        FilamentState { positions: x.to_vec(), tangents: t.to_vec(), time, ..template.clone() }
    }
}

impl OdeSystem for FilamentSystem {
    fn dim(&self) -> usize {
        6 * self.l0.len()
    }

    fn rhs(&mut self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), DynamicsError> {
        if y.len() != self.dim() || dy.len() != self.dim() {
            return Err(DynamicsError::Shape { expected: self.dim(), got: y.len().min(dy.len()) });
        }
        let (x, t) = Self::split(y);
        let (dx, dt) = dy.split_at_mut(dy.len() / 2);
        self.rhs.eval(x, t, bytemuck::cast_slice_mut(dx), bytemuck::cast_slice_mut(dt))
    }

    fn correct(&mut self, y: &mut [f64]) -> Result<Option<ModulusDrift>, DynamicsError> {
        let (a, b) = y.split_at_mut(y.len() / 2);
        let drift =
            renormalize_in_place(bytemuck::cast_slice(a), bytemuck::cast_slice_mut(b), &self.l0, self.rhs.params())?;
        Ok(Some(drift))
    }

    fn tau_cap(&self, y: &[f64]) -> f64 {
        let (x, t) = Self::split(y);
        let x1_min = x.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
        let mut cap = stability_max_tau(self.h, self.rhs.params(), x1_min.max(0.0));
        if let Some(limit) = self.dispersion_limit {
            let m_min = t.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
            cap = cap.min(dispersion_max_tau(self.h, m_min, limit));
        }
        cap
    }
}

/// Result of a single filament step attempt.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub state: FilamentState,
    pub tau_used: f64,
    pub error_estimate: f64,
    pub accepted: bool,
    pub drift: ModulusDrift,
}

/// One embedded step of the filament model followed by renormalization.
///
/// The error estimate is the weighted RMS norm of the row difference scaled
/// by the configured tolerances, so `accepted` is `error_estimate <= 1`.
pub fn rkf_step(
    state: &FilamentState,
    params: &ModelParams,
    tau: f64,
    config: &IntegratorConfig,
) -> Result<StepResult, IntegratorError> {
    let mut sys = FilamentSystem::new(state, params, config);
    let y = FilamentSystem::pack(state);
    let mut stepper = Stepper::new(*config, y.len())?;
    let attempt = stepper.attempt(&mut sys, state.time, &y, tau)?;
    let mut next = stepper.proposal().to_vec();
    let drift = sys.correct(&mut next)?.unwrap_or_default();
    Ok(StepResult {
        state: FilamentSystem::unpack(&next, state, state.time + tau),
        tau_used: tau,
        error_estimate: attempt.error,
        accepted: attempt.accepted(),
        drift,
    })
}

/// Borrowed view of the filament at an accepted step.
#[derive(Debug, Clone, Copy)]
pub struct FilamentView<'a> {
    pub time: f64,
    pub positions: &'a [Vec3],
    pub tangents: &'a [Vec3],
    template: &'a FilamentState,
}

impl FilamentView<'_> {
    pub fn to_state(&self) -> FilamentState {
        FilamentState {
            positions: self.positions.to_vec(),
            tangents: self.tangents.to_vec(),
            time: self.time,
            ..self.template.clone()
        }
    }
}

/// Failed run with the last accepted state.
#[derive(Debug, Error, Clone)]
#[error("{source} (last good state at t = {})", last_state.time)]
pub struct RunError {
    pub source: IntegratorError,
    pub last_state: Box<FilamentState>,
    pub summary: RunSummary,
}

/// Advance a filament through `schedule`, calling `observer` after every
/// accepted step.
pub fn run<F>(
    state: &FilamentState,
    params: &ModelParams,
    config: &IntegratorConfig,
    schedule: &Schedule,
    mut observer: F,
) -> Result<(FilamentState, RunSummary), RunError>
where
    F: FnMut(&StepReport, &FilamentView<'_>),
{
    let mut y = FilamentSystem::pack(state);
    let fail = |source: IntegratorError, y: &[f64], summary: RunSummary| RunError {
        source,
        last_state: Box::new(FilamentSystem::unpack(y, state, summary.t)),
        summary,
    };
    let mut sys = FilamentSystem::new(state, params, config);
    let mut stepper = Stepper::new(*config, y.len())
        .map_err(|e| fail(e, &y, RunSummary { t: state.time, tau_next: config.tau_init, steps: 0, rejections: 0 }))?;
    let result = stepper.integrate(&mut sys, state.time, &mut y, schedule, |report, flat| {
        let (positions, tangents) = FilamentSystem::split(flat);
        observer(report, &FilamentView { time: report.t, positions, tangents, template: state });
    });
    match result {
        Ok(summary) => Ok((FilamentSystem::unpack(&y, state, summary.t), summary)),
        Err((e, summary)) => Err(fail(e, &y, summary)),
    }
}

/// One step of the semi-implicit reduced scheme: `x` explicitly from the
/// second difference of `y`, then `y` from the updated `x`.
pub fn km_semi_implicit_step(state: &ReducedState, params: &ModelParams, tau: f64, h: f64) -> ReducedState {
    let n = state.len();
    let lambda = tau / (h * h);
    let rc2 = params.r_c * params.r_c;
    let lap = |f: &[f64], j: usize| f[(j + 1) % n] - 2.0 * f[j] + f[(j + n - 1) % n];
    let x: Vec<f64> = (0..n).map(|j| state.x[j] - lambda * lap(&state.y, j)).collect();
    let y = (0..n)
        .map(|j| {
            let interaction = if params.epsilon == 0.0 { 0.0 } else { params.epsilon * x[j] / (x[j] * x[j] + rc2) };
            state.y[j] + lambda * lap(&x, j) - tau * interaction
        })
        .collect();
    ReducedState { x, y }
}
