//! Right-hand sides of the filament model and of its reduced two-component
//! form, together with the tangent-modulus law.
//!
//! The evolved filament is the one with `x1 > 0`; its partner is the mirror
//! image and only enters through the interaction term
//!
//! ```text
//! X_t = T x T_s / |T|^3 - eps x1 / (x1^2 + rc^2) (T x e1) / |T|
//! ```
//!
//! The tangent is evolved alongside `X` by differentiating this expression
//! in `s`, with `d|T|/ds` taken from the closed-form modulus law rather than
//! from differences of `|T|`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{FilamentState, ModelParams, Vec3};
use crate::stencil::{self, DerivativeOrder, StencilError};

/// Tangents shorter than this are treated as degenerate.
pub const MIN_TANGENT: f64 = 1e-150;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("non-finite value at node {node}")]
    NonFiniteState { node: usize },
    #[error("tangent vanishes at node {node}")]
    ZeroTangent { node: usize },
    #[error("singular stretching at node {node}: x1 = r_c = 0 with positive epsilon")]
    Degenerate { node: usize },
    #[error("array length mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },
    #[error(transparent)]
    Stencil(#[from] StencilError),
}

/// Time derivatives of positions and tangents.
#[derive(Debug, Clone, PartialEq)]
pub struct RhsOutput {
    pub dx_dt: Vec<Vec3>,
    pub dt_dt: Vec<Vec3>,
}

/// Components `(x1, x2)` of the reduced model on a periodic grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl ReducedState {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self, DynamicsError> {
        if x.len() != y.len() {
            return Err(DynamicsError::Shape { expected: x.len(), got: y.len() });
        }
        Ok(Self { x, y })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Largest relative deviation from the modulus law before and after a
/// renormalization pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ModulusDrift {
    pub before: f64,
    pub after: f64,
}

/// `L0 (x1² + r_c²)^(-ε/2)`.
pub fn tangent_modulus(x1: f64, l0: f64, params: &ModelParams) -> Result<f64, DynamicsError> {
    modulus_at(0, x1, l0, params)
}

fn modulus_at(node: usize, x1: f64, l0: f64, params: &ModelParams) -> Result<f64, DynamicsError> {
    if params.epsilon == 0.0 {
        return Ok(l0);
    }
    let d = x1 * x1 + params.r_c * params.r_c;
    if d == 0.0 {
        return Err(DynamicsError::Degenerate { node });
    }
    Ok(l0 * d.powf(-0.5 * params.epsilon))
}

/// Rescale every tangent to the modulus prescribed by the law, in place.
pub fn renormalize_in_place(
    positions: &[Vec3],
    tangents: &mut [Vec3],
    l0: &[f64],
    params: &ModelParams,
) -> Result<ModulusDrift, DynamicsError> {
    let mut drift = ModulusDrift::default();
    for (j, ((x, t), &l)) in positions.iter().zip(tangents.iter_mut()).zip(l0).enumerate() {
        let target = modulus_at(j, x.x, l, params)?;
        let m = t.norm();
        if !m.is_finite() {
            return Err(DynamicsError::NonFiniteState { node: j });
        }
        if m < MIN_TANGENT {
            return Err(DynamicsError::ZeroTangent { node: j });
        }
        drift.before = drift.before.max((m - target).abs() / m);
        *t *= target / m;
        let m = t.norm();
        drift.after = drift.after.max((m - target).abs() / m);
    }
    Ok(drift)
}

/// Copy of `state` with tangents rescaled to the modulus law.
pub fn renormalize_tangents(state: &FilamentState, params: &ModelParams) -> Result<FilamentState, DynamicsError> {
    let mut out = state.clone();
    renormalize_in_place(&state.positions, &mut out.tangents, &state.l0, params)?;
    Ok(out)
}

/// Reusable evaluator of the coupled position/tangent right-hand side.
///
/// Holds the run constants `L0'/L0` and scratch space for the tangent
/// derivatives so that repeated evaluations do not allocate.
#[derive(Debug, Clone)]
pub struct FilamentRhs {
    params: ModelParams,
    h: f64,
    log_l0_prime: Vec<f64>,
    d1: Vec<Vec3>,
    d2: Vec<Vec3>,
}

impl FilamentRhs {
    pub fn new(state: &FilamentState, params: &ModelParams) -> Self {
        let n = state.len();
        Self {
            params: *params,
            h: state.grid.spacing(),
            log_l0_prime: state.l0_prime.iter().zip(&state.l0).map(|(lp, l)| lp / l).collect(),
            d1: vec![Vec3::zeros(); n],
            d2: vec![Vec3::zeros(); n],
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.d1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d1.is_empty()
    }

    pub fn eval(
        &mut self,
        positions: &[Vec3],
        tangents: &[Vec3],
        dx_dt: &mut [Vec3],
        dt_dt: &mut [Vec3],
    ) -> Result<(), DynamicsError> {
        let n = self.len();
        for len in [positions.len(), tangents.len(), dx_dt.len(), dt_dt.len()] {
            if len != n {
                return Err(DynamicsError::Shape { expected: n, got: len });
            }
        }
        stencil::first_and_second_interleaved(
            bytemuck::cast_slice(tangents),
            self.h,
            bytemuck::cast_slice_mut(&mut self.d1),
            bytemuck::cast_slice_mut(&mut self.d2),
        )?;
        let eps = self.params.epsilon;
        let rc2 = self.params.r_c * self.params.r_c;
        for j in 0..n {
            let x1 = positions[j].x;
            let t = tangents[j];
            if !(x1.is_finite() && t.x.is_finite() && t.y.is_finite() && t.z.is_finite()) {
                return Err(DynamicsError::NonFiniteState { node: j });
            }
            let m = t.norm();
            if m < MIN_TANGENT {
                return Err(DynamicsError::ZeroTangent { node: j });
            }
            let ts = self.d1[j];
            let tss = self.d2[j];
            let inv_m = 1.0 / m;
            let inv_m3 = inv_m * inv_m * inv_m;
            let t_x_ts = t.cross(&ts);
            let mut vx = t_x_ts * inv_m3;
            let mut vt = t.cross(&tss) * inv_m3;
            if eps == 0.0 {
                let ms = self.log_l0_prime[j];
                vt -= t_x_ts * (3.0 * ms * inv_m3);
            } else {
                let d = x1 * x1 + rc2;
                if d == 0.0 {
                    return Err(DynamicsError::Degenerate { node: j });
                }
                let ms = self.log_l0_prime[j] - eps * x1 * t.x / d;
                vt -= t_x_ts * (3.0 * ms * inv_m3);
                let t_x_e1 = Vec3::new(0.0, t.z, -t.y);
                let ts_x_e1 = Vec3::new(0.0, ts.z, -ts.y);
                let coupling = eps * inv_m / d;
                vx -= t_x_e1 * (coupling * x1);
                vt -= (ts_x_e1 * x1 + t_x_e1 * (t.x * (rc2 - x1 * x1) / d - x1 * ms)) * coupling;
            }
            dx_dt[j] = vx;
            dt_dt[j] = vt;
        }
        Ok(())
    }
}

/// Full right-hand side of the coupled position/tangent system.
pub fn rhs_full(state: &FilamentState, params: &ModelParams) -> Result<RhsOutput, DynamicsError> {
    let n = state.len();
    let mut out = RhsOutput { dx_dt: vec![Vec3::zeros(); n], dt_dt: vec![Vec3::zeros(); n] };
    FilamentRhs::new(state, params).eval(&state.positions, &state.tangents, &mut out.dx_dt, &mut out.dt_dt)?;
    Ok(out)
}

/// Rates of the reduced model `x_t = -y_ss`, `y_t = x_ss - ε x / (x² + r_c²)`.
pub fn rhs_km(state: &ReducedState, params: &ModelParams, h: f64) -> Result<ReducedState, DynamicsError> {
    if state.x.len() != state.y.len() {
        return Err(DynamicsError::Shape { expected: state.x.len(), got: state.y.len() });
    }
    let mut dx = stencil::differentiate_scalar(&state.y, DerivativeOrder::Second, h)?;
    let mut dy = stencil::differentiate_scalar(&state.x, DerivativeOrder::Second, h)?;
    let rc2 = params.r_c * params.r_c;
    for (j, (rx, ry)) in dx.iter_mut().zip(dy.iter_mut()).enumerate() {
        let x = state.x[j];
        *rx = -*rx;
        if params.epsilon != 0.0 {
            let d = x * x + rc2;
            if d == 0.0 {
                return Err(DynamicsError::Degenerate { node: j });
            }
            *ry -= params.epsilon * x / d;
        }
        if !(rx.is_finite() && ry.is_finite()) {
            return Err(DynamicsError::NonFiniteState { node: j });
        }
    }
    Ok(ReducedState { x: dx, y: dy })
}
