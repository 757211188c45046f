use std::path::PathBuf;

use serde::Serialize;
use vortex_core::experiment::ExperimentError;
use vortex_core::geometry::GeometryError;
use vortex_core::io::IoError;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, missing or malformed configuration, invalid parameters.
    Usage(String),
    /// The solver stopped before the requested end time.
    Solver { message: String, snapshot: Option<PathBuf> },
    /// Stored inputs are missing, unreadable or do not match the schema.
    Data(String),
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    error: &'a str,
    message: &'a str,
    exit_code: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    snapshot: Option<&'a PathBuf>,
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Solver { .. } => 1,
            Self::Usage(_) => 2,
            Self::Data(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Solver { .. } => "solver",
            Self::Usage(_) => "usage",
            Self::Data(_) => "data",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Self::Usage(m) | Self::Data(m) | Self::Solver { message: m, .. } => m,
        }
    }

    pub fn to_json(&self) -> String {
        let snapshot = match self {
            Self::Solver { snapshot, .. } => snapshot.as_ref(),
            _ => None,
        };
        let rec = ErrorRecord { error: self.kind(), message: self.message(), exit_code: self.exit_code(), snapshot };
        serde_json::to_string(&rec).unwrap_or_else(|_| format!("{{\"error\":\"{}\"}}", self.kind()))
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.kind(), self.message())
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        Self::Usage(e.to_string())
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Geometry(g) => g.into(),
            ExperimentError::Run(r) => Self::Solver { message: r.to_string(), snapshot: None },
        }
    }
}

/// Failures writing outputs are reported as data errors; failures reading
/// inputs are mapped by the caller.
impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        Self::Data(e.to_string())
    }
}
