//! Periodic sampled curves and the initial configurations used in the runs.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;

/// Smallest grid accepted anywhere in the crate.
pub const MIN_NODES: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("grid needs at least {MIN_NODES} nodes, got {0}")]
    TooFewNodes(usize),
    #[error("grid extent must be positive and finite, got {0}")]
    BadExtent(f64),
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("perturbation reaches the symmetry plane (min x1 = {min_x1}); vortices would intersect")]
    Intersecting { min_x1: f64 },
    #[error("eye configuration requires (1+cos θ)/(1-cos θ) - 1/b² >= 0, got {radicand} (b = {b}, θ = {theta})")]
    InvalidAngle { b: f64, theta: f64, radicand: f64 },
    #[error("state arrays have inconsistent lengths: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },
}

/// Uniform periodic grid in the curve parameter `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n_nodes: usize,
    extent: f64,
}

impl Grid {
    pub fn new(n_nodes: usize, extent: f64) -> Result<Self, GeometryError> {
        if n_nodes < MIN_NODES {
            return Err(GeometryError::TooFewNodes(n_nodes));
        }
        if !(extent.is_finite() && extent > 0.0) {
            return Err(GeometryError::BadExtent(extent));
        }
        Ok(Self { n_nodes, extent })
    }

    /// Grid on `(0, 2π)`.
    pub fn periodic(n_nodes: usize) -> Result<Self, GeometryError> {
        Self::new(n_nodes, TAU)
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn spacing(&self) -> f64 {
        self.extent / self.n_nodes as f64
    }

    pub fn param(&self, j: usize) -> f64 {
        j as f64 * self.spacing()
    }

    pub fn params(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_nodes).map(move |j| self.param(j))
    }
}

/// Physical parameters of the pair model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Interaction strength.
    pub epsilon: f64,
    /// Regularization (core) radius.
    pub r_c: f64,
    /// Initial half-separation of the pair.
    pub b: f64,
    /// Amplitude of the initial cosine perturbation.
    pub delta: f64,
}

impl ModelParams {
    pub fn new(epsilon: f64, r_c: f64, b: f64, delta: f64) -> Result<Self, GeometryError> {
        let p = Self { epsilon, r_c, b, delta };
        p.validate()?;
        Ok(p)
    }

    /// Parameters of the reconnection runs: `b = √ε/2`, `δ = b/20`.
    pub fn reconnection(epsilon: f64, r_c: f64) -> Result<Self, GeometryError> {
        let b = epsilon.sqrt() / 2.0;
        Self::new(epsilon, r_c, b, b / 20.0)
    }

    /// Pure local induction (no partner filament).
    pub fn lia() -> Self {
        Self { epsilon: 0.0, r_c: 0.0, b: 1.0, delta: 0.0 }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let bad = |msg: String| Err(GeometryError::InvalidParams(msg));
        if !(self.epsilon.is_finite() && (0.0..=1.0).contains(&self.epsilon)) {
            return bad(format!("epsilon must lie in [0, 1], got {}", self.epsilon));
        }
        if !(self.r_c.is_finite() && self.r_c >= 0.0) {
            return bad(format!("r_c must be non-negative, got {}", self.r_c));
        }
        if !(self.b.is_finite() && self.b > 0.0) {
            return bad(format!("b must be positive, got {}", self.b));
        }
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return bad(format!("delta must be non-negative, got {}", self.delta));
        }
        if self.r_c >= self.b {
            return bad(format!("r_c = {} must be smaller than b = {}", self.r_c, self.b));
        }
        Ok(())
    }

    /// Translation velocity `-ε b / (b² + r_c²)` of the straight pair.
    pub fn translation_velocity(&self) -> f64 {
        -self.epsilon * self.b / (self.b * self.b + self.r_c * self.r_c)
    }
}

/// Band-limited white noise added to the straight pair.
///
/// Each of `x1` and `x2` receives a Fourier series over modes
/// `1..=max_mode` with independent standard-normal coefficients, rescaled so
/// the RMS of each component equals `amplitude`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WhiteNoise {
    pub amplitude: f64,
    pub seed: u64,
    pub max_mode: usize,
}

/// Sampled filament: positions, tangents and the reference modulus data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilamentState {
    pub grid: Grid,
    pub positions: Vec<Vec3>,
    pub tangents: Vec<Vec3>,
    /// Reference modulus `L0(s)`; fixed for the whole run.
    pub l0: Vec<f64>,
    /// `dL0/ds`; fixed for the whole run.
    pub l0_prime: Vec<f64>,
    pub time: f64,
}

impl FilamentState {
    pub fn new(
        grid: Grid,
        positions: Vec<Vec3>,
        tangents: Vec<Vec3>,
        l0: Vec<f64>,
        l0_prime: Vec<f64>,
        time: f64,
    ) -> Result<Self, GeometryError> {
        let n = grid.n_nodes();
        for len in [positions.len(), tangents.len(), l0.len(), l0_prime.len()] {
            if len != n {
                return Err(GeometryError::Shape { expected: n, got: len });
            }
        }
        Ok(Self { grid, positions, tangents, l0, l0_prime, time })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Build a state from an analytic curve `s -> (X, X_s, X_ss)`.
    ///
    /// `L0` is chosen so the tangent-modulus law holds exactly at the
    /// initial time.
    pub fn from_curve<F>(grid: Grid, params: &ModelParams, curve: F) -> Self
    where
        F: Fn(f64) -> (Vec3, Vec3, Vec3),
    {
        let n = grid.n_nodes();
        let mut positions = Vec::with_capacity(n);
        let mut tangents = Vec::with_capacity(n);
        let mut l0 = Vec::with_capacity(n);
        let mut l0_prime = Vec::with_capacity(n);
        let eps = params.epsilon;
        let rc2 = params.r_c * params.r_c;
        for s in grid.params() {
            let (x, xs, xss) = curve(s);
            let m = xs.norm();
            let m_s = xs.dot(&xss) / m;
            let (l, l_s) = if eps == 0.0 {
                (m, m_s)
            } else {
                let d = x.x * x.x + rc2;
                let w = d.powf(0.5 * eps);
                (m * w, m_s * w + m * eps * x.x * xs.x * w / d)
            };
            positions.push(x);
            tangents.push(xs);
            l0.push(l);
            l0_prime.push(l_s);
        }
        Self { grid, positions, tangents, l0, l0_prime, time: 0.0 }
    }
}

/// Symmetric pair `X(s) = (b - δ cos s, -δ cos s, s - S/2)`.
///
/// On a grid of extent `S` the cosine is taken with wavenumber `2π/S`, which
/// is `cos s` on the default `(0, 2π)` grid.
pub fn init_perturbed_pair(grid: &Grid, params: &ModelParams) -> Result<FilamentState, GeometryError> {
    init_pair(grid, params, None)
}

/// [`init_perturbed_pair`] plus optional seeded white noise.
pub fn init_pair(
    grid: &Grid,
    params: &ModelParams,
    noise: Option<&WhiteNoise>,
) -> Result<FilamentState, GeometryError> {
    params.validate()?;
    if params.delta >= params.b {
        return Err(GeometryError::Intersecting { min_x1: params.b - params.delta });
    }
    let kappa = TAU / grid.extent();
    let half = 0.5 * grid.extent();
    let series = noise.map(|nz| NoiseSeries::sample(nz, kappa));
    let (b, delta) = (params.b, params.delta);
    let curve = |s: f64| {
        let (c, sn) = ((kappa * s).cos(), (kappa * s).sin());
        let mut x = Vec3::new(b - delta * c, -delta * c, s - half);
        let mut xs = Vec3::new(delta * kappa * sn, delta * kappa * sn, 1.0);
        let mut xss = Vec3::new(delta * kappa * kappa * c, delta * kappa * kappa * c, 0.0);
        if let Some(series) = &series {
            let (f, fs, fss) = series.eval(s);
            x += f;
            xs += fs;
            xss += fss;
        }
        (x, xs, xss)
    };
    let state = FilamentState::from_curve(*grid, params, curve);
    let min_x1 = state.positions.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
    if min_x1 <= 0.0 {
        return Err(GeometryError::Intersecting { min_x1 });
    }
    Ok(state)
}

struct NoiseSeries {
    kappa: f64,
    // (cos, sin) coefficients per mode for x1 and x2
    x1: Vec<(f64, f64)>,
    x2: Vec<(f64, f64)>,
}

impl NoiseSeries {
    fn sample(noise: &WhiteNoise, kappa: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
        let mut draw = |modes: usize| -> Vec<(f64, f64)> {
            let raw: Vec<(f64, f64)> =
                (0..modes).map(|_| (StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))).collect();
            let power: f64 = raw.iter().map(|(a, b)| 0.5 * (a * a + b * b)).sum();
            let scale = if power > 0.0 { noise.amplitude / power.sqrt() } else { 0.0 };
            raw.into_iter().map(|(a, b)| (a * scale, b * scale)).collect()
        };
        let x1 = draw(noise.max_mode);
        let x2 = draw(noise.max_mode);
        Self { kappa, x1, x2 }
    }

    fn eval(&self, s: f64) -> (Vec3, Vec3, Vec3) {
        let comp = |coef: &[(f64, f64)]| {
            let (mut f, mut fs, mut fss) = (0.0, 0.0, 0.0);
            for (i, (a, b)) in coef.iter().enumerate() {
                let k = (i + 1) as f64 * self.kappa;
                let (c, sn) = ((k * s).cos(), (k * s).sin());
                f += a * c + b * sn;
                fs += k * (b * c - a * sn);
                fss -= k * k * (a * c + b * sn);
            }
            (f, fs, fss)
        };
        let (a, a_s, a_ss) = comp(&self.x1);
        let (b, b_s, b_ss) = comp(&self.x2);
        (Vec3::new(a, b, 0.0), Vec3::new(a_s, b_s, 0.0), Vec3::new(a_ss, b_ss, 0.0))
    }
}

/// Radicand `(1+cos θ)/(1-cos θ) - 1/b²` of the eye-shaped vortex.
pub fn eye_radicand(b: f64, theta: f64) -> f64 {
    let c = theta.cos();
    (1.0 + c) / (1.0 - c) - 1.0 / (b * b)
}

/// Eye-shaped closed vortex with corners at `s = 0` and `s = π`.
///
/// The branch on `(0, π]` is `(b sin s, s - π/2, -A cos s)` with
/// `A = b √((1+cos θ)/(1-cos θ) - 1/b²)`; the branch on `(π, 2π]` is its
/// reflection across `x1 = 0`. Corner nodes take the one-sided tangent of
/// the branch they belong to. The state carries `ε = 0` modulus data.
pub fn init_eye(grid: &Grid, b: f64, theta: f64) -> Result<FilamentState, GeometryError> {
    if (grid.extent() - TAU).abs() > 1e-12 {
        return Err(GeometryError::BadExtent(grid.extent()));
    }
    if !(b.is_finite() && b > 0.0) {
        return Err(GeometryError::InvalidParams(format!("eye thickness must be positive, got {b}")));
    }
    let radicand = eye_radicand(b, theta);
    if !(radicand.is_finite() && radicand >= 0.0) {
        return Err(GeometryError::InvalidAngle { b, theta, radicand });
    }
    let amp = b * radicand.sqrt();
    let curve = |s: f64| {
        // node 0 is the corner at s = 2π on the reflected branch
        let s = if s == 0.0 { TAU } else { s };
        let (sn, c) = s.sin_cos();
        let (x2, dx2) = if s <= PI { (s - FRAC_PI_2, 1.0) } else { (3.0 * FRAC_PI_2 - s, -1.0) };
        (Vec3::new(b * sn, x2, -amp * c), Vec3::new(b * c, dx2, amp * sn), Vec3::new(-b * sn, 0.0, amp * c))
    };
    Ok(FilamentState::from_curve(*grid, &ModelParams::lia(), curve))
}

/// Eye amplitude `A` along `x3`.
pub fn eye_amplitude(b: f64, theta: f64) -> Option<f64> {
    let r = eye_radicand(b, theta);
    (r.is_finite() && r >= 0.0).then(|| b * r.sqrt())
}

/// Curve length by the periodic trapezoidal rule on `|T| h`.
pub fn perimeter(state: &FilamentState) -> f64 {
    state.grid.spacing() * state.tangents.iter().map(|t| t.norm()).sum::<f64>()
}

/// Mirror image of a point across the symmetry plane `x1 = 0`.
pub fn mirror(p: &Vec3) -> Vec3 {
    Vec3::new(-p.x, p.y, p.z)
}
