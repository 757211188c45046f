//! Spectral content of sampled trajectories and extremum probes at rational
//! multiples of a reference time.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::AnalysisError;

/// Linear interpolation of `(times, values)` onto `samples` equally spaced
/// points of `[t0, t1)`.
pub fn resample_uniform(
    times: &[f64],
    values: &[f64],
    t0: f64,
    t1: f64,
    samples: usize,
) -> Result<Vec<f64>, AnalysisError> {
    if times.len() != values.len() || times.len() < 2 {
        return Err(AnalysisError::InvalidInput("resampling needs at least two matching samples".into()));
    }
    if !(t0 >= times[0] && t1 <= times[times.len() - 1] && t1 > t0) {
        return Err(AnalysisError::InvalidInput(format!(
            "interval [{t0}, {t1}] not covered by samples on [{}, {}]",
            times[0],
            times[times.len() - 1]
        )));
    }
    let mut out = Vec::with_capacity(samples);
    let mut i = 0;
    for k in 0..samples {
        let t = t0 + (t1 - t0) * k as f64 / samples as f64;
        while i + 2 < times.len() && times[i + 1] < t {
            i += 1;
        }
        let (a, b) = (times[i], times[i + 1]);
        let w = if b > a { ((t - a) / (b - a)).clamp(0.0, 1.0) } else { 0.0 };
        out.push(values[i] + w * (values[i + 1] - values[i]));
    }
    Ok(out)
}

/// Remove the straight line through the first sample and the periodic
/// continuation of the last, so a quasi-periodic record has no jump at the
/// wrap.
pub fn detrend(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    if n < 2 {
        return values.to_vec();
    }
    // slope chosen so that the record plus one more step would close up
    let slope = (values[n - 1] - values[0]) / (n - 1) as f64;
    values.iter().enumerate().map(|(i, v)| v - values[0] - slope * i as f64).collect()
}

/// Summed power `Σ_c |DFT(c)_j|² / N²` over the given components.
pub fn power_spectrum(components: &[Vec<Complex64>]) -> Vec<f64> {
    let n = components.first().map_or(0, Vec::len);
    let mut power = vec![0.0; n];
    if n == 0 {
        return power;
    }
    let fft = FftPlanner::new().plan_fft_forward(n);
    let norm = 1.0 / (n as f64 * n as f64);
    for c in components {
        let mut buf = c.clone();
        fft.process(&mut buf);
        for (p, z) in power.iter_mut().zip(&buf) {
            *p += z.norm_sqr() * norm;
        }
    }
    power
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    /// Square indices `k² · base` examined.
    pub indices: Vec<usize>,
    /// Amplitude `√power` at each examined index.
    pub magnitudes: Vec<f64>,
    /// Power at each square index over the mean power of its two neighbours.
    pub ratios: Vec<f64>,
    /// Total power at square indices over total neighbour power.
    pub overall: f64,
}

/// Compare power at indices `k² · base`, `k = 1..`, against the adjacent
/// indices (DC excluded), up to the Nyquist index or `max_k`.
pub fn fourier_square_dominance(power: &[f64], base: usize, max_k: usize) -> DominanceReport {
    let n = power.len();
    let mut rep = DominanceReport { indices: Vec::new(), magnitudes: Vec::new(), ratios: Vec::new(), overall: 0.0 };
    let (mut on, mut off) = (0.0, 0.0);
    for k in 1..=max_k {
        let idx = k * k * base.max(1);
        if idx + 1 >= n / 2 {
            break;
        }
        let neighbours: Vec<f64> = [idx - 1, idx + 1].into_iter().filter(|&i| i != 0).map(|i| power[i]).collect();
        let mean = neighbours.iter().sum::<f64>() / neighbours.len() as f64;
        rep.indices.push(idx);
        rep.magnitudes.push(power[idx].sqrt());
        rep.ratios.push(if mean > 0.0 { power[idx] / mean } else { f64::INFINITY });
        on += power[idx];
        off += mean;
    }
    rep.overall = if off > 0.0 { on / off } else { f64::INFINITY };
    rep
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtremumKind {
    Max,
    Min,
    Neither,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeMarker {
    pub p: u32,
    pub q: u32,
    pub time: f64,
    pub kind: ExtremumKind,
    /// Height of the extremum above (or depth below) the window edges.
    pub prominence: f64,
}

/// Classify the neighbourhood of `p/q · t_star` for each rational.
///
/// Within `[t - half_width, t + half_width]` the point is a maximum when the
/// window maximum sits within `half_width / 2` of `t` and exceeds both edge
/// values; minima likewise.
pub fn rational_probe(
    times: &[f64],
    values: &[f64],
    t_star: f64,
    rationals: &[(u32, u32)],
    half_width: f64,
) -> Vec<ProbeMarker> {
    rationals
        .iter()
        .map(|&(p, q)| {
            let t = t_star * p as f64 / q as f64;
            let idx: Vec<usize> = (0..times.len()).filter(|&i| (times[i] - t).abs() <= half_width).collect();
            let mut marker = ProbeMarker { p, q, time: t, kind: ExtremumKind::Neither, prominence: 0.0 };
            if idx.len() < 3 {
                return marker;
            }
            let (first, last) = (values[idx[0]], values[idx[idx.len() - 1]]);
            let arg = |better: fn(f64, f64) -> bool| {
                idx.iter().copied().fold(idx[0], |b, i| if better(values[i], values[b]) { i } else { b })
            };
            let imax = arg(|a, b| a > b);
            let imin = arg(|a, b| a < b);
            let near = |i: usize| (times[i] - t).abs() <= 0.5 * half_width;
            let up = values[imax] - first.max(last);
            let down = first.min(last) - values[imin];
            if near(imax) && up > 0.0 && (up >= down || !near(imin)) {
                marker.kind = ExtremumKind::Max;
                marker.prominence = up;
            } else if near(imin) && down > 0.0 {
                marker.kind = ExtremumKind::Min;
                marker.prominence = down;
            }
            marker
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::rndf::rndf_samples;
    use approx::assert_relative_eq;
    use std::f64::consts::TAU;

    #[test]
    fn single_exponential_peak() {
        let n = 64;
        let z: Vec<Complex64> = (0..n).map(|i| Complex64::from_polar(1.0, 4.0 * TAU * i as f64 / n as f64)).collect();
        let p = power_spectrum(&[z]);
        for (j, v) in p.iter().enumerate() {
            if j == 4 {
                assert_relative_eq!(*v, 1.0, epsilon = 1e-12);
            } else {
                assert!(*v < 1e-24);
            }
        }
    }

    #[test]
    fn rndf_spectrum_has_inverse_square_peaks() {
        let n = 16384;
        let z: Vec<Complex64> = rndf_samples(n, TAU, 100).into_iter().map(|(_, v)| v).collect();
        let p = power_spectrum(&[z]);
        let rep = fourier_square_dominance(&p, 1, 100);
        assert!(rep.indices.len() >= 90);
        for (k, m) in rep.magnitudes.iter().enumerate() {
            let expected = 1.0 / ((k + 1) * (k + 1)) as f64;
            assert!((m - expected).abs() <= 1e-3 * expected);
        }
        for &i in &rep.indices {
            for j in [i - 1, i + 1] {
                if j != 0 && (j as f64).sqrt().fract() != 0.0 {
                    assert!(p[j].sqrt() <= 1e-3 * p[i].sqrt());
                }
            }
        }
    }

    #[test]
    fn resample_and_detrend() {
        let t = [0.0, 1.0, 3.0];
        let v = [0.0, 2.0, 6.0];
        let r = resample_uniform(&t, &v, 0.0, 3.0, 6).unwrap();
        assert_eq!(r, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        assert!(detrend(&r).iter().all(|x| x.abs() < 1e-15));
        assert!(resample_uniform(&t, &v, -1.0, 2.0, 4).is_err());
    }

    #[test]
    fn constant_series_has_no_extrema() {
        let t: Vec<f64> = (0..100).map(|i| i as f64 * 0.01).collect();
        let v = vec![2.0; 100];
        for m in rational_probe(&t, &v, 0.5, &[(1, 1), (1, 2), (3, 2)], 0.05) {
            assert_eq!(m.kind, ExtremumKind::Neither);
        }
    }

    #[test]
    fn parabola_extrema() {
        let t: Vec<f64> = (0..1000).map(|i| i as f64 * 1e-3).collect();
        let up: Vec<f64> = t.iter().map(|t| -(t - 0.5) * (t - 0.5)).collect();
        let m = rational_probe(&t, &up, 0.25, &[(2, 1), (1, 1)], 0.05);
        assert_eq!(m[0].kind, ExtremumKind::Max);
        assert_eq!(m[1].kind, ExtremumKind::Neither);
        let down: Vec<f64> = up.iter().map(|v| -v).collect();
        assert_eq!(rational_probe(&t, &down, 0.25, &[(2, 1)], 0.05)[0].kind, ExtremumKind::Min);
    }
}
