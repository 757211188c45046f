//! Self-similar profiles `X(s, t) = √t G(s / √t)` of the model with zero
//! core radius.
//!
//! Substituting the ansatz gives
//!
//! ```text
//! ½ (G - η G') = G' x G'' / |G'|³ - ε / G1 · (G' x e1) / |G'|
//! ```
//!
//! whose tangential part is the constraint `G · G' = η |G'|²`. The normal
//! part, together with the modulus law `|G'| ∝ (η / G1)^ε`, yields the
//! explicit second-order system
//!
//! ```text
//! G'' = ½ |G'| G x G' + ε |G'|² e1 / G1 + ε G' (1/η - 2 G1'/G1)
//! ```
//!
//! which is integrated here.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::DynamicsError;
use crate::geometry::{ModelParams, Vec3};
use crate::integrator::{IntegratorConfig, IntegratorError, OdeSystem, Schedule, SolutionRow, Stepper};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SelfSimError {
    #[error("profile blows up (G1 -> 0 or non-finite) after eta = {last_eta}")]
    ProfileBlowup { last_eta: f64 },
    #[error("invalid profile request: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfSimilarProfile {
    pub etas: Vec<f64>,
    pub g: Vec<Vec3>,
    pub g_prime: Vec<Vec3>,
    /// Model parameters with the core radius set to zero.
    pub params: ModelParams,
}

impl SelfSimilarProfile {
    pub fn len(&self) -> usize {
        self.etas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.etas.is_empty()
    }

    /// `G''` from the profile equation at every sample.
    pub fn second_derivative(&self) -> Vec<Vec3> {
        (0..self.len()).map(|i| profile_rhs(self.etas[i], &self.g[i], &self.g_prime[i], self.params.epsilon)).collect()
    }

    /// Curvature `|G' x G''| / |G'|³` at every sample.
    pub fn curvature(&self) -> Vec<f64> {
        self.second_derivative()
            .iter()
            .zip(&self.g_prime)
            .map(|(gpp, gp)| gp.cross(gpp).norm() / gp.norm().powi(3))
            .collect()
    }
}

/// `G''(η)` for the given state.
pub fn profile_rhs(eta: f64, g: &Vec3, gp: &Vec3, epsilon: f64) -> Vec3 {
    let m = gp.norm();
    let mut gpp = g.cross(gp) * (0.5 * m);
    if epsilon != 0.0 {
        gpp += Vec3::new(epsilon * m * m / g.x, 0.0, 0.0);
        gpp += gp * (epsilon * (1.0 / eta - 2.0 * gp.x / g.x));
    }
    gpp
}

/// Initial data at `eta0` satisfying `G · G' = η |G'|²`: `G0 = η0 G0' +
/// offset` with the component of `offset` along `G0'` removed.
pub fn consistent_start(eta0: f64, g0_prime: Vec3, offset: Vec3) -> (Vec3, Vec3) {
    let unit = g0_prime.normalize();
    let perp = offset - unit * unit.dot(&offset);
    (g0_prime * eta0 + perp, g0_prime)
}

struct ProfileSystem {
    epsilon: f64,
    eta0: f64,
    direction: f64,
}

impl OdeSystem for ProfileSystem {
    fn dim(&self) -> usize {
        6
    }

    fn rhs(&mut self, u: f64, y: &[f64], dy: &mut [f64]) -> Result<(), DynamicsError> {
        let eta = self.eta0 + self.direction * u;
        let g = Vec3::new(y[0], y[1], y[2]);
        let gp = Vec3::new(y[3], y[4], y[5]);
        if self.epsilon != 0.0 && (g.x == 0.0 || eta == 0.0) {
            return Err(DynamicsError::Degenerate { node: 0 });
        }
        let gpp = profile_rhs(eta, &g, &gp, self.epsilon);
        for k in 0..3 {
            dy[k] = self.direction * gp[k];
            dy[3 + k] = self.direction * gpp[k];
        }
        if dy.iter().any(|v| !v.is_finite()) {
            return Err(DynamicsError::NonFiniteState { node: 0 });
        }
        Ok(())
    }
}

/// Integrate the profile from `eta_start` to `eta_end` (either direction)
/// and sample it at `samples` equally spaced values of `η`, endpoints
/// included.
pub fn selfsim_integrate(
    g0: Vec3,
    g0_prime: Vec3,
    eta_start: f64,
    eta_end: f64,
    params: &ModelParams,
    tol: f64,
    samples: usize,
) -> Result<SelfSimilarProfile, SelfSimError> {
    let eps = params.epsilon;
    let bad = |m: &str| Err(SelfSimError::InvalidInput(m.to_string()));
    if samples < 2 {
        return bad("need at least two samples");
    }
    if !(eta_start.is_finite() && eta_end.is_finite()) || eta_start == eta_end {
        return bad("eta range must be finite and non-empty");
    }
    if eps != 0.0 && (eta_start <= 0.0 || eta_end <= 0.0) {
        return bad("eta must stay positive when epsilon > 0");
    }
    if eps != 0.0 && g0.x == 0.0 {
        return bad("G1 must be nonzero at the start");
    }
    if !(g0_prime.norm() > 0.0) {
        return bad("G' must be nonzero at the start");
    }
    let length = (eta_end - eta_start).abs();
    let mut sys = ProfileSystem { epsilon: eps, eta0: eta_start, direction: (eta_end - eta_start).signum() };
    let config = IntegratorConfig {
        abs_tol: tol,
        rel_tol: tol,
        tau_init: (1e-3 * length).min(1e-4),
        tau_min: 1e-14 * length,
        tau_max: 0.05 * length,
        stability_guard: false,
        dispersion_limit: None,
        solution_row: SolutionRow::Fifth,
        ..IntegratorConfig::default()
    };
    let mut stepper = Stepper::new(config, 6).map_err(|e| SelfSimError::InvalidInput(e.to_string()))?;
    let du = length / (samples - 1) as f64;
    let outputs: Vec<f64> = (1..samples - 1).map(|i| i as f64 * du).collect();
    let schedule = Schedule::with_outputs(length, outputs);
    let mut y = vec![g0.x, g0.y, g0.z, g0_prime.x, g0_prime.y, g0_prime.z];
    let profile_params = ModelParams { r_c: 0.0, ..*params };
    let mut out =
        SelfSimilarProfile { etas: vec![eta_start], g: vec![g0], g_prime: vec![g0_prime], params: profile_params };
    let mut last_eta = eta_start;
    let result = stepper.integrate(&mut sys, 0.0, &mut y, &schedule, |r, y| {
        last_eta = eta_start + sys_direction(eta_start, eta_end) * r.t;
        if r.output.is_some() || r.t == length {
            out.etas.push(if r.t == length { eta_end } else { last_eta });
            out.g.push(Vec3::new(y[0], y[1], y[2]));
            out.g_prime.push(Vec3::new(y[3], y[4], y[5]));
        }
    });
    match result {
        Ok(_) => Ok(out),
        Err((IntegratorError::StepUnderflow { .. } | IntegratorError::Rhs(_), _)) => {
            Err(SelfSimError::ProfileBlowup { last_eta })
        }
        Err((e, _)) => Err(SelfSimError::InvalidInput(e.to_string())),
    }
}

fn sys_direction(start: f64, end: f64) -> f64 {
    (end - start).signum()
}

/// Largest residual of the substituted equation
/// `½ (G - η G') - G' x G'' / |G'|³ + ε / G1 (G' x e1) / |G'|`, with `G''`
/// obtained by fourth-order differences of the sampled `G'`.
///
/// Needs equally spaced samples; the two samples nearest each end are
/// skipped. Profiles with fewer than five samples have residual zero.
pub fn selfsim_residual(profile: &SelfSimilarProfile) -> f64 {
    let n = profile.len();
    if n < 5 {
        return 0.0;
    }
    let d = (profile.etas[n - 1] - profile.etas[0]) / (n - 1) as f64;
    let eps = profile.params.epsilon;
    let gp = &profile.g_prime;
    let mut worst: f64 = 0.0;
    for i in 2..n - 2 {
        let gpp = (gp[i - 2] - gp[i - 1] * 8.0 + gp[i + 1] * 8.0 - gp[i + 2]) / (12.0 * d);
        let (g, p, eta) = (profile.g[i], gp[i], profile.etas[i]);
        let m = p.norm();
        let mut r = (g - p * eta) * 0.5 - p.cross(&gpp) / (m * m * m);
        if eps != 0.0 {
            r += Vec3::new(0.0, p.z, -p.y) * (eps / (g.x * m));
        }
        worst = worst.max(r.norm());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn lia() -> ModelParams {
        ModelParams::lia()
    }

    #[test]
    fn unit_speed_is_preserved_without_interaction() {
        let tol = 1e-10;
        let prof = selfsim_integrate(Vec3::zeros(), Vec3::new(0.0, 0.6, 0.8), 1e-3, 10.0, &lia(), tol, 2001).unwrap();
        for gp in &prof.g_prime {
            assert!((gp.norm() - 1.0).abs() <= 10.0 * tol);
        }
    }

    #[test]
    fn curvature_is_constant_without_interaction() {
        let tol = 1e-10;
        let (g0, gp0) = consistent_start(1e-3, Vec3::new(0.0, 0.0, 1.0), Vec3::new(0.3, 0.1, 0.0));
        let prof = selfsim_integrate(g0, gp0, 1e-3, 10.0, &lia(), tol, 2001).unwrap();
        let k = prof.curvature();
        assert!(k[0] > 0.1);
        for c in &k {
            assert!((c - k[0]).abs() <= 10.0 * tol, "{c} vs {}", k[0]);
        }
    }

    #[test]
    fn reversed_start_gives_mirrored_profile() {
        // with G0 and G0' in the plane x3 = 0, reversing G0' reflects the
        // profile across that plane and reverses η
        let g0 = Vec3::new(0.1, 0.2, 0.0);
        let gp0 = Vec3::new(0.6, 0.8, 0.0);
        let fwd = selfsim_integrate(g0, -gp0, 0.0, 2.0, &lia(), 1e-11, 201).unwrap();
        let bwd = selfsim_integrate(g0, gp0, 0.0, -2.0, &lia(), 1e-11, 201).unwrap();
        for i in 0..fwd.len() {
            let m = Vec3::new(bwd.g[i].x, bwd.g[i].y, -bwd.g[i].z);
            assert_relative_eq!(fwd.g[i], m, epsilon = 1e-8);
            assert_relative_eq!(fwd.etas[i], -bwd.etas[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn residual_small_on_solutions() {
        for eps in [0.0, 0.05] {
            let p = ModelParams { epsilon: eps, r_c: 0.0, b: 1.0, delta: 0.0 };
            let (g0, gp0) = consistent_start(0.5, Vec3::new(0.1, 0.3, 1.0), Vec3::new(0.4, 0.0, 0.0));
            let prof = selfsim_integrate(g0, gp0, 0.5, 3.0, &p, 1e-11, 5001).unwrap();
            let r = selfsim_residual(&prof);
            assert!(r < 1e-8, "eps {eps}: residual {r}");
        }
    }

    #[test]
    fn residual_detects_corruption() {
        let tol = 1e-10;
        let (g0, gp0) = consistent_start(1e-3, Vec3::new(0.0, 0.0, 1.0), Vec3::new(0.3, 0.1, 0.0));
        let prof = selfsim_integrate(g0, gp0, 1e-3, 10.0, &lia(), tol, 4001).unwrap();
        let clean = selfsim_residual(&prof);
        assert!(clean <= 10.0 * tol.max(1e-9), "{clean}");
        let mut noisy = prof.clone();
        for (i, g) in noisy.g.iter_mut().enumerate() {
            *g *= 1.0 + 0.01 * ((i * 7919) % 13) as f64 / 13.0;
        }
        assert!(selfsim_residual(&noisy) >= 10.0 * clean);
        let empty = SelfSimilarProfile { etas: vec![], g: vec![], g_prime: vec![], params: lia() };
        assert_eq!(selfsim_residual(&empty), 0.0);
    }

    #[test]
    fn blowup_is_reported() {
        // G1 driven through zero faster than the step control can follow
        let p = ModelParams { epsilon: 0.05, r_c: 0.0, b: 1.0, delta: 0.0 };
        let r = selfsim_integrate(Vec3::new(1e-3, 0.0, 0.1), Vec3::new(-100.0, 0.0, 1.0), 0.1, 5.0, &p, 1e-9, 11);
        assert!(matches!(r, Err(SelfSimError::ProfileBlowup { .. })), "{r:?}");
    }

    #[test]
    fn rejects_bad_requests() {
        let p = ModelParams { epsilon: 0.1, r_c: 0.0, b: 1.0, delta: 0.0 };
        assert!(selfsim_integrate(Vec3::new(1.0, 0.0, 0.0), Vec3::z(), 0.0, 1.0, &p, 1e-8, 10).is_err());
        assert!(selfsim_integrate(Vec3::zeros(), Vec3::z(), 0.1, 1.0, &p, 1e-8, 10).is_err());
        assert!(selfsim_integrate(Vec3::x(), Vec3::zeros(), 0.1, 1.0, &lia(), 1e-8, 10).is_err());
    }
}
