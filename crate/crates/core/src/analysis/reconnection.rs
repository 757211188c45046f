//! Onset of persistent oscillation in a sampled signal.

use serde::{Deserialize, Serialize};

use super::AnalysisError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Sign changes required after the candidate onset.
    pub min_followers: usize,
    /// Width of the window in which those sign changes must occur.
    pub window: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self { min_followers: 3, window: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub time: f64,
    /// Local sample spacing at the detected time.
    pub resolution: f64,
}

/// Times at which the discrete derivative of `values` changes sign.
///
/// The change is attributed to the sample shared by the two differences.
/// Zero differences keep the previous sign.
pub fn derivative_sign_changes(times: &[f64], values: &[f64]) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    let mut prev_sign = 0.0;
    for i in 1..times.len().min(values.len()) {
        let d = values[i] - values[i - 1];
        if d == 0.0 {
            continue;
        }
        let sign = d.signum();
        if prev_sign != 0.0 && sign != prev_sign {
            out.push((i - 1, times[i - 1]));
        }
        prev_sign = sign;
    }
    out
}

/// Earliest derivative sign change followed by at least
/// `config.min_followers` more within `config.window`.
pub fn detect_reconnection(times: &[f64], values: &[f64], config: &DetectorConfig) -> Result<Detection, AnalysisError> {
    if times.len() != values.len() {
        return Err(AnalysisError::InvalidInput(format!("{} times but {} values", times.len(), values.len())));
    }
    let changes = derivative_sign_changes(times, values);
    for (k, &(i, t)) in changes.iter().enumerate() {
        let followers = changes[k + 1..].iter().take_while(|(_, u)| *u <= t + config.window).count();
        if followers >= config.min_followers {
            let left = if i > 0 { t - times[i - 1] } else { f64::INFINITY };
            let right = times.get(i + 1).map_or(f64::INFINITY, |u| u - t);
            return Ok(Detection { time: t, resolution: left.min(right) });
        }
    }
    Err(AnalysisError::NoTransition)
}
