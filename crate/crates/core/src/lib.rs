//! Regularized vortex-filament model for a symmetric antiparallel vortex pair.
//!
//! Only one filament is evolved; its partner is the mirror image across the
//! plane `x1 = 0`. The filament carries positions `X` and tangents `T = X_s`
//! on a uniform periodic grid and is advanced with an embedded Runge-Kutta
//! scheme in time and eighth-order central differences along the curve.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`] - grids, parameters, filament state and initial curves.
//! * [`stencil`] - periodic eighth-order finite differences.
//! * [`dynamics`] - right-hand sides of the full and reduced models.
//! * [`integrator`] - adaptive Runge-Kutta-Fehlberg stepping and the
//!   semi-implicit reference scheme for the reduced model.
//! * [`analysis`] - Crow stability, fluid impulse, reconnection detection,
//!   Frenet diagnostics, RNDF and spectral probes.
//! * [`selfsim`] - self-similar profile integration.
//! * [`io`] - snapshot, time-series and profile file formats.
//! * [`experiment`] - run drivers shared by the CLI and the test suites.

pub mod analysis;
pub mod dynamics;
pub mod experiment;
pub mod geometry;
pub mod integrator;
pub mod io;
pub mod selfsim;
pub mod stencil;

pub use dynamics::{renormalize_tangents, rhs_full, rhs_km, tangent_modulus, DynamicsError, ReducedState, RhsOutput};
pub use geometry::{init_eye, init_perturbed_pair, perimeter, FilamentState, Grid, ModelParams, Vec3, WhiteNoise};
pub use integrator::{IntegratorConfig, IntegratorError, StepResult, FEHLBERG_45};
pub use io::{read_snapshot, write_snapshot, IoError, SnapshotMeta};
pub use num_complex::Complex64;
pub use selfsim::{selfsim_integrate, selfsim_residual, SelfSimError, SelfSimilarProfile};
