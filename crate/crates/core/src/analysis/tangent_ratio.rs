//! Largest tangent component along the symmetry direction and its lower
//! bound `√ε / ((1 + ε) π)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::geometry::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangentRatio {
    /// `max_j |T1_j| / |T_j|`.
    pub max_ratio: f64,
    pub bound: f64,
    /// True when `x1` is constant, so the monotonicity hypothesis is void.
    pub degenerate: bool,
}

impl TangentRatio {
    pub fn satisfies_bound(&self) -> bool {
        self.max_ratio >= self.bound
    }
}

pub fn ratio_bound(epsilon: f64) -> f64 {
    epsilon.sqrt() / ((1.0 + epsilon) * PI)
}

pub fn max_tangent_ratio(tangents: &[Vec3]) -> f64 {
    tangents.iter().map(|t| t.x.abs() / t.norm()).fold(0.0, f64::max)
}

/// Whether `x1` is monotone along both arcs joining its minimum and
/// maximum, allowing roundoff-sized reversals.
fn monotone_between_extrema(positions: &[Vec3]) -> bool {
    let n = positions.len();
    let x1 = |j: usize| positions[j % n].x;
    let (mut lo, mut hi) = (0, 0);
    for j in 0..n {
        if x1(j) < x1(lo) {
            lo = j;
        }
        if x1(j) > x1(hi) {
            hi = j;
        }
    }
    let slack = 1e-12 * (x1(hi).abs() + x1(lo).abs());
    // forward from the minimum to the maximum x1 must not decrease, and
    // forward from the maximum back to the minimum it must not increase
    let up = (hi + n - lo) % n;
    let down = (lo + n - hi) % n;
    (0..up).all(|k| x1(lo + k + 1) >= x1(lo + k) - slack) && (0..down).all(|k| x1(hi + k + 1) <= x1(hi + k) + slack)
}

pub fn tangent_ratio(positions: &[Vec3], tangents: &[Vec3], epsilon: f64) -> Result<TangentRatio, AnalysisError> {
    let max_ratio = max_tangent_ratio(tangents);
    let (min, max) = positions.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.x), b.max(p.x)));
    let degenerate = max - min <= 1e-14 * max.abs().max(1.0);
    if !degenerate && !monotone_between_extrema(positions) {
        return Err(AnalysisError::HypothesisViolated { max_ratio });
    }
    Ok(TangentRatio { max_ratio, bound: ratio_bound(epsilon), degenerate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{init_perturbed_pair, Grid, ModelParams};
    use approx::assert_relative_eq;

    #[test]
    fn bound_value() {
        assert_relative_eq!(ratio_bound(0.05), 0.06778, epsilon = 5e-5);
    }

    #[test]
    fn straight_pair_is_degenerate() {
        let p = ModelParams::new(0.05, 0.01, 0.11, 0.0).unwrap();
        let st = init_perturbed_pair(&Grid::periodic(32).unwrap(), &p).unwrap();
        let r = tangent_ratio(&st.positions, &st.tangents, 0.05).unwrap();
        assert_eq!(r.max_ratio, 0.0);
        assert!(r.degenerate);
        assert!(!r.satisfies_bound());
    }

    #[test]
    fn cosine_pair_holds_hypothesis() {
        let p = ModelParams::reconnection(0.05, 5e-3).unwrap();
        let st = init_perturbed_pair(&Grid::periodic(128).unwrap(), &p).unwrap();
        let r = tangent_ratio(&st.positions, &st.tangents, 0.05).unwrap();
        assert!(!r.degenerate);
        // |T1|/|T| = δ sin s / √(1 + 2δ² sin² s), largest at s = π/2
        let d = p.delta;
        assert_relative_eq!(r.max_ratio, d / (1.0 + 2.0 * d * d).sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn wavy_profile_violates_hypothesis() {
        let n = 64;
        let h = std::f64::consts::TAU / n as f64;
        let pos: Vec<Vec3> = (0..n)
            .map(|j| Vec3::new(0.2 - 0.01 * (j as f64 * h).cos() + 0.004 * (5.0 * j as f64 * h).sin(), 0.0, 0.0))
            .collect();
        let tan = vec![Vec3::new(0.0, 0.0, 1.0); n];
        assert!(matches!(tangent_ratio(&pos, &tan, 0.05), Err(AnalysisError::HypothesisViolated { .. })));
    }
}
