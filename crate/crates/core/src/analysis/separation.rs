//! Distance between the filament and its mirror image, and power-law fits.

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::geometry::{mirror, Vec3};

/// Gap proxy `2 min_j x1`.
pub fn separation(positions: &[Vec3]) -> f64 {
    2.0 * positions.iter().map(|p| p.x).fold(f64::INFINITY, f64::min)
}

/// Node index of the smallest `x1`; ties resolve to the lowest index.
pub fn gap_center(positions: &[Vec3]) -> usize {
    let mut best = 0;
    for (j, p) in positions.iter().enumerate() {
        if p.x < positions[best].x {
            best = j;
        }
    }
    best
}

/// Smallest node-to-node distance between the filament and its mirror.
///
/// Quadratic in the node count; meant for verifying [`separation`].
pub fn true_separation(positions: &[Vec3]) -> f64 {
    let mut best = f64::INFINITY;
    for p in positions {
        for q in positions {
            best = best.min((p - mirror(q)).norm_squared());
        }
    }
    best.sqrt()
}

/// Least-squares fit `value ≈ prefactor · (t - t0)^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub exponent: f64,
    pub prefactor: f64,
    /// Coefficient of determination of the log-log regression.
    pub r_squared: f64,
    pub samples: usize,
}

/// Fit over samples with `t > t0` and positive value.
pub fn fit_power_law(times: &[f64], values: &[f64], t0: f64) -> Result<PowerFit, AnalysisError> {
    let pts: Vec<(f64, f64)> =
        times.iter().zip(values).filter(|(t, v)| **t > t0 && **v > 0.0).map(|(t, v)| ((t - t0).ln(), v.ln())).collect();
    if pts.len() < 2 {
        return Err(AnalysisError::InvalidInput("power-law fit needs two usable samples".into()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(AnalysisError::InvalidInput("power-law fit needs distinct times".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(PowerFit { exponent: slope, prefactor: (my - slope * mx).exp(), r_squared, samples: pts.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{init_perturbed_pair, Grid, ModelParams};
    use approx::assert_relative_eq;

    #[test]
    fn straight_and_perturbed_pair() {
        let g = Grid::periodic(64).unwrap();
        let p = ModelParams::new(0.05, 0.01, 0.11, 0.0).unwrap();
        let st = init_perturbed_pair(&g, &p).unwrap();
        assert_eq!(separation(&st.positions), 0.22);
        let p = ModelParams::new(0.05, 0.01, 0.11, 0.01).unwrap();
        let st = init_perturbed_pair(&g, &p).unwrap();
        assert_relative_eq!(separation(&st.positions), 2.0 * (0.11 - 0.01), epsilon = 1e-15);
        assert_eq!(gap_center(&st.positions), 0);
    }

    #[test]
    fn proxy_agrees_with_true_distance_near_plane() {
        let g = Grid::periodic(256).unwrap();
        let p = ModelParams::new(0.05, 0.001, 0.02, 0.015).unwrap();
        let st = init_perturbed_pair(&g, &p).unwrap();
        let proxy = separation(&st.positions);
        let exact = true_separation(&st.positions);
        assert!(exact <= proxy + 1e-15);
        assert_relative_eq!(exact, proxy, max_relative = 1e-9);
    }

    #[test]
    fn recovers_square_root() {
        let t: Vec<f64> = (1..200).map(|i| 1.0 + i as f64 * 1e-3).collect();
        let v: Vec<f64> = t.iter().map(|t| 0.3 * (t - 1.0f64).sqrt()).collect();
        let fit = fit_power_law(&t, &v, 1.0).unwrap();
        assert_relative_eq!(fit.exponent, 0.5, epsilon = 1e-12);
        assert_relative_eq!(fit.prefactor, 0.3, epsilon = 1e-12);
        assert_relative_eq!(fit.r_squared, 1.0, epsilon = 1e-12);
    }
}
