//! Riemann's non-differentiable function `R(t) = Σ_{k≥1} e^{i t k²} / k²`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rndf {
    pub value: Complex64,
    /// Bound `1/terms` on the neglected tail `Σ_{k>terms} 1/k²`.
    pub tail_bound: f64,
}

/// Partial sum over `1..=terms`.
pub fn rndf(t: f64, terms: usize) -> Rndf {
    let mut value = Complex64::new(0.0, 0.0);
    // sum smallest terms first
    for k in (1..=terms).rev() {
        let k2 = (k * k) as f64;
        value += Complex64::from_polar(1.0 / k2, t * k2);
    }
    Rndf { value, tail_bound: if terms == 0 { f64::INFINITY } else { 1.0 / terms as f64 } }
}

/// `samples` values of the partial sum on `[0, period)`.
pub fn rndf_samples(samples: usize, period: f64, terms: usize) -> Vec<(f64, Complex64)> {
    (0..samples)
        .map(|i| {
            let t = period * i as f64 / samples as f64;
            (t, rndf(t, terms).value)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn zeta_two() {
        for n in [10, 1000, 100_000] {
            let r = rndf(0.0, n);
            assert!((r.value.re - PI * PI / 6.0).abs() <= r.tail_bound);
            assert_eq!(r.value.im, 0.0);
        }
        let r = rndf(0.0, 100_000);
        assert!((r.value.re - 1.6449341).abs() < 2e-5);
    }

    #[test]
    fn alternating_at_pi() {
        for n in [11, 1000, 20_000] {
            let r = rndf(PI, n);
            assert!((r.value.re + PI * PI / 12.0).abs() <= r.tail_bound);
        }
        assert!((rndf(PI, 20_000).value.re + 0.8224670).abs() < 1e-6);
    }

    #[test]
    fn periodic_in_two_pi() {
        for t in [0.3, 1.7, 4.0] {
            let a = rndf(t, 200).value;
            let b = rndf(t + TAU, 200).value;
            assert!((a - b).norm() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn truncation_bound(t in -10.0f64..10.0, n in 1usize..200, extra in 1usize..500) {
            let a = rndf(t, n).value;
            let b = rndf(t, n + extra).value;
            prop_assert!((a - b).norm() <= 1.0 / n as f64);
        }
    }
}
