//! Curvature components in the frame adapted to the symmetry direction.
//!
//! With `L = |X_s|` the first normal lies in the plane of `T` and `e1`; the
//! two curvature components and the frame rotation follow from `x1` alone:
//!
//! ```text
//! κ1 = ∂s(x1_s / L) / √(L² - x1_s²)
//! κ2 = L x1_t / √(L² - x1_s²)
//! ω  = κ2 x1_s / √(L² - x1_s²)
//! ```

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::geometry::Vec3;
use crate::stencil::{differentiate_scalar, DerivativeOrder};

pub const DEFAULT_FRAME_GUARD: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrenetDiagnostics {
    pub kappa1: Vec<f64>,
    pub kappa2: Vec<f64>,
    pub omega_frame: Vec<f64>,
    pub curvature: Vec<f64>,
}

/// Frame diagnostics from tangents and the normal velocity component
/// `x1_t` at each node.
///
/// Fails when `L² - x1_s² <= guard · L²` anywhere.
pub fn frenet_diagnostics(
    tangents: &[Vec3],
    x1_t: &[f64],
    h: f64,
    guard: f64,
) -> Result<FrenetDiagnostics, AnalysisError> {
    if tangents.len() != x1_t.len() {
        return Err(AnalysisError::InvalidInput(format!("{} tangents but {} velocities", tangents.len(), x1_t.len())));
    }
    let mut root = Vec::with_capacity(tangents.len());
    for (j, t) in tangents.iter().enumerate() {
        let l2 = t.norm_squared();
        let r = l2 - t.x * t.x;
        if !(r > guard * l2) {
            return Err(AnalysisError::FrameDegenerate { node: j });
        }
        root.push(r.sqrt());
    }
    let ratio: Vec<f64> = tangents.iter().map(|t| t.x / t.norm()).collect();
    let ratio_s = differentiate_scalar(&ratio, DerivativeOrder::First, h)
        .map_err(|e| AnalysisError::InvalidInput(e.to_string()))?;
    let n = tangents.len();
    let mut out = FrenetDiagnostics {
        kappa1: Vec::with_capacity(n),
        kappa2: Vec::with_capacity(n),
        omega_frame: Vec::with_capacity(n),
        curvature: Vec::with_capacity(n),
    };
    for j in 0..n {
        let k1 = ratio_s[j] / root[j];
        let k2 = tangents[j].norm() * x1_t[j] / root[j];
        out.kappa1.push(k1);
        out.kappa2.push(k2);
        out.omega_frame.push(k2 * tangents[j].x / root[j]);
        out.curvature.push(k1.hypot(k2));
    }
    Ok(out)
}

/// Direct curvature `|X_s x X_ss| / |X_s|³`.
pub fn curvature_oracle(tangents: &[Vec3], tangent_derivs: &[Vec3]) -> Vec<f64> {
    tangents.iter().zip(tangent_derivs).map(|(t, ts)| t.cross(ts).norm() / t.norm().powi(3)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::rhs_full;
    use crate::geometry::{init_perturbed_pair, Grid, ModelParams};
    use crate::stencil::differentiate;
    use approx::assert_relative_eq;
    use std::f64::consts::TAU;

    #[test]
    fn straight_line_is_flat() {
        let t = vec![Vec3::new(0.0, 0.0, 1.0); 32];
        let d = frenet_diagnostics(&t, &[0.0; 32], 0.1, DEFAULT_FRAME_GUARD).unwrap();
        assert!(d.kappa1.iter().chain(&d.kappa2).chain(&d.omega_frame).all(|v| *v == 0.0));
    }

    #[test]
    fn static_circle_in_plane_with_e1() {
        let n = 128;
        let h = TAU / n as f64;
        // skip the two nodes where the tangent is parallel to e1
        let t: Vec<Vec3> = (0..n)
            .map(|j| {
                let (s, c) = (j as f64 * h + 0.5 * h).sin_cos();
                Vec3::new(-s, c, 0.0)
            })
            .collect();
        let d = frenet_diagnostics(&t, &vec![0.0; n], h, DEFAULT_FRAME_GUARD).unwrap();
        for c in &d.curvature {
            assert_relative_eq!(*c, 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn guard_trips_when_tangent_meets_e1() {
        let mut t = vec![Vec3::new(0.0, 0.0, 1.0); 16];
        t[4] = Vec3::new(2.0, 0.0, 0.0);
        assert_eq!(
            frenet_diagnostics(&t, &[0.0; 16], 0.1, DEFAULT_FRAME_GUARD),
            Err(AnalysisError::FrameDegenerate { node: 4 })
        );
    }

    #[test]
    fn translating_straight_pair_has_no_kappa2() {
        let p = ModelParams::new(0.05, 0.025, 0.11, 0.0).unwrap();
        let g = Grid::periodic(32).unwrap();
        let st = init_perturbed_pair(&g, &p).unwrap();
        let rates = rhs_full(&st, &p).unwrap();
        let x1_t: Vec<f64> = rates.dx_dt.iter().map(|v| v.x).collect();
        let d = frenet_diagnostics(&st.tangents, &x1_t, g.spacing(), DEFAULT_FRAME_GUARD).unwrap();
        assert!(d.kappa2.iter().all(|k| *k == 0.0));
    }

    #[test]
    fn components_reproduce_curvature_on_evolving_pair() {
        let p = ModelParams::new(0.05, 0.01, 0.2, 0.05).unwrap();
        let g = Grid::periodic(256).unwrap();
        let st = init_perturbed_pair(&g, &p).unwrap();
        let rates = rhs_full(&st, &p).unwrap();
        let x1_t: Vec<f64> = rates.dx_dt.iter().map(|v| v.x).collect();
        let d = frenet_diagnostics(&st.tangents, &x1_t, g.spacing(), DEFAULT_FRAME_GUARD).unwrap();
        let ts = differentiate(&st.tangents, DerivativeOrder::First, g.spacing()).unwrap();
        let oracle = curvature_oracle(&st.tangents, &ts);
        for (a, b) in d.curvature.iter().zip(&oracle) {
            assert_relative_eq!(*a, *b, epsilon = 1e-9);
        }
    }
}
