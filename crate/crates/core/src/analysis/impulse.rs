//! Fluid impulse `½ ∫ (X - X0) x X_s ds` over an arclength window.
//!
//! The integrand is sampled at the nodes and integrated exactly as a
//! piecewise-linear function of `s`, so windows may start and end between
//! nodes and the result varies continuously as the window moves.

use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;

/// Reference point of the impulse integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Origin {
    /// The curve point at the window centre.
    WindowCenter,
    Fixed(Vec3),
}

/// Sampled impulse history of one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FluidImpulseSeries {
    pub times: Vec<f64>,
    pub values: Vec<Vec3>,
    pub fraction: f64,
    /// Window centre node at each sample.
    pub centers: Vec<usize>,
}

impl FluidImpulseSeries {
    pub fn new(fraction: f64) -> Self {
        Self { fraction, ..Self::default() }
    }

    pub fn push(&mut self, t: f64, value: Vec3, center: usize) {
        self.times.push(t);
        self.values.push(value);
        self.centers.push(center);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// One Cartesian component (0-based) of every sample.
    pub fn component(&self, axis: usize) -> Vec<f64> {
        self.values.iter().map(|v| v[axis]).collect()
    }
}

/// Impulse over the parameter interval `[start, end]`, both measured in
/// node units (`s / h`) and allowed to be fractional or to wrap around.
pub fn impulse_between(positions: &[Vec3], tangents: &[Vec3], h: f64, start: f64, end: f64, origin: Vec3) -> Vec3 {
    let n = positions.len();
    if n == 0 || end <= start {
        return Vec3::zeros();
    }
    let f = |j: i64| {
        let j = j.rem_euclid(n as i64) as usize;
        (positions[j] - origin).cross(&tangents[j])
    };
    let mut total = Vec3::zeros();
    let mut cell = start.floor() as i64;
    while (cell as f64) < end {
        let lo = (start - cell as f64).max(0.0);
        let hi = (end - cell as f64).min(1.0);
        if hi > lo {
            let (a, b) = (f(cell), f(cell + 1));
            total += a * (hi - lo) + (b - a) * (0.5 * (hi * hi - lo * lo));
        }
        cell += 1;
    }
    total * (0.5 * h)
}

/// Parameter offset (in node units, signed by `dir`) from node `center` at
/// which the accumulated arclength reaches `length`.
fn reach(tangents: &[Vec3], h: f64, center: usize, length: f64, dir: i64) -> f64 {
    let n = tangents.len() as i64;
    let modulus = |j: i64| tangents[j.rem_euclid(n) as usize].norm();
    let mut walked = 0.0;
    let mut j = center as i64;
    for step in 0..n {
        let cell = 0.5 * h * (modulus(j) + modulus(j + dir));
        if walked + cell >= length {
            let frac = if cell > 0.0 { (length - walked) / cell } else { 0.0 };
            return dir as f64 * (step as f64 + frac);
        }
        walked += cell;
        j += dir;
    }
    dir as f64 * n as f64
}

/// Impulse over a window of `fraction` of the perimeter centred on node
/// `center`, with the window located by trapezoidal arclength.
pub fn fluid_impulse(
    positions: &[Vec3],
    tangents: &[Vec3],
    h: f64,
    center: usize,
    fraction: f64,
    origin: Origin,
) -> Vec3 {
    let n = positions.len();
    if n == 0 {
        return Vec3::zeros();
    }
    let perimeter = h * tangents.iter().map(|t| t.norm()).sum::<f64>();
    let half = 0.5 * fraction.clamp(0.0, 1.0) * perimeter;
    let c = center as f64;
    let (start, end) = if fraction >= 1.0 {
        (c - 0.5 * n as f64, c + 0.5 * n as f64)
    } else {
        (c + reach(tangents, h, center, half, -1), c + reach(tangents, h, center, half, 1))
    };
    let x0 = match origin {
        Origin::WindowCenter => positions[center],
        Origin::Fixed(p) => p,
    };
    impulse_between(positions, tangents, h, start, end, x0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{PI, TAU};

    fn circle(n: usize, r: f64) -> (Vec<Vec3>, Vec<Vec3>, f64) {
        let h = TAU / n as f64;
        let pos = (0..n).map(|j| {
            let (s, c) = (j as f64 * h).sin_cos();
            Vec3::new(r * c, r * s, 0.0)
        });
        let tan = (0..n).map(|j| {
            let (s, c) = (j as f64 * h).sin_cos();
            Vec3::new(-r * s, r * c, 0.0)
        });
        (pos.collect(), tan.collect(), h)
    }

    #[test]
    fn straight_segment_through_origin() {
        let n = 64;
        let pos: Vec<Vec3> = (0..n).map(|j| Vec3::new(0.1, 0.2, j as f64 * 0.1)).collect();
        let tan = vec![Vec3::new(0.0, 0.0, 1.0); n];
        let f = fluid_impulse(&pos, &tan, 0.1, 32, 0.2, Origin::WindowCenter);
        assert!(f.norm() < 1e-15);
    }

    #[test]
    fn circle_area() {
        let (p, t, h) = circle(256, 1.0);
        let f = fluid_impulse(&p, &t, h, 0, 1.0, Origin::Fixed(Vec3::zeros()));
        assert_relative_eq!(f, Vec3::new(0.0, 0.0, PI), epsilon = 1e-12);
        let (p, t, h) = circle(256, 2.0);
        let f = fluid_impulse(&p, &t, h, 10, 1.0, Origin::Fixed(Vec3::zeros()));
        assert_relative_eq!(f.z, 4.0 * PI, epsilon = 1e-11);
    }

    #[test]
    fn window_has_requested_arclength() {
        // on the unit circle a window of fraction q spans angle θ = 2πq and
        // the impulse about the centre is θ/2 along the normal
        let (p, t, h) = circle(200, 1.0);
        let q = 0.2;
        let f = fluid_impulse(&p, &t, h, 0, q, Origin::Fixed(Vec3::zeros()));
        assert_relative_eq!(f.z, 0.5 * TAU * q, epsilon = 1e-4);
    }

    #[test]
    fn symmetric_window_has_no_odd_component() {
        // curve symmetric under s -> -s with (x1, x2, x3) -> (x1, x2, -x3)
        let n = 128;
        let h = TAU / n as f64;
        let pos: Vec<Vec3> = (0..n)
            .map(|j| {
                let s = j as f64 * h;
                Vec3::new(
                    0.3 - 0.05 * s.cos(),
                    -0.05 * s.cos(),
                    if j == 0 { 0.0 } else { s - if s > PI { TAU } else { 0.0 } },
                )
            })
            .collect();
        let tan: Vec<Vec3> = (0..n)
            .map(|j| {
                let s = j as f64 * h;
                Vec3::new(0.05 * s.sin(), 0.05 * s.sin(), 1.0)
            })
            .collect();
        let f = fluid_impulse(&pos, &tan, h, 0, 0.2, Origin::WindowCenter);
        assert!(f.x.abs() > 1e-6);
        assert!(f.z.abs() < 1e-12 * f.norm());
    }

    proptest! {
        #[test]
        fn additivity(a in -20.0f64..20.0, len1 in 0.0f64..30.0, len2 in 0.0f64..30.0, ox in -1.0f64..1.0) {
            let (p, t, h) = circle(64, 1.3);
            let o = Vec3::new(ox, 0.2, -0.1);
            let whole = impulse_between(&p, &t, h, a, a + len1 + len2, o);
            let parts = impulse_between(&p, &t, h, a, a + len1, o) + impulse_between(&p, &t, h, a + len1, a + len1 + len2, o);
            prop_assert!((whole - parts).norm() < 1e-12);
        }
    }
}
