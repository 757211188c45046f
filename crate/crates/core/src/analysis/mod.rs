//! Diagnostics computed from filament states and time series.

pub mod crow;
pub mod frenet;
pub mod impulse;
pub mod reconnection;
pub mod rndf;
pub mod separation;
pub mod spectrum;
pub mod tangent_ratio;

use thiserror::Error;

pub use crow::{crow_analysis, crow_eigenvalues, crow_matrix, dominant_mode, CrowResult, DominantMode};
pub use frenet::{frenet_diagnostics, FrenetDiagnostics};
pub use impulse::{fluid_impulse, impulse_between, FluidImpulseSeries, Origin};
pub use reconnection::{detect_reconnection, Detection, DetectorConfig};
pub use rndf::{rndf, Rndf};
pub use separation::{fit_power_law, separation, true_separation, PowerFit};
pub use spectrum::{fourier_square_dominance, rational_probe, DominanceReport, ExtremumKind, ProbeMarker};
pub use tangent_ratio::{tangent_ratio, TangentRatio};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("core radius {r_c} must be smaller than the half-separation {b}")]
    CoreTooLarge { b: f64, r_c: f64 },
    #[error("no persistent oscillation onset found in the series")]
    NoTransition,
    #[error("frame degenerates at node {node}: tangent nearly parallel to e1")]
    FrameDegenerate { node: usize },
    #[error("x1 is not monotone between the gap minimum and maximum (max ratio {max_ratio})")]
    HypothesisViolated { max_ratio: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
