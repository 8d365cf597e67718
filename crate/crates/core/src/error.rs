use crate::mesh::Defect;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid mesh: {} defect(s){}", .0.len(), .0.first().map(|d| format!(", first: {d}")).unwrap_or_default())]
    InvalidMesh(Vec<Defect>),

    #[error("enclosed volume {0:e} is not positive")]
    NonPositiveVolume(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
        /// Best iterate reached before giving up, when one exists.
        best: Option<Vec<f64>>,
    },

    #[error(
        "standard error {standard_error:e} above target after {samples} samples (estimate {estimate:e})"
    )]
    SamplingTolerance {
        estimate: f64,
        standard_error: f64,
        samples: u64,
    },

    #[error("boundary has {components} connected components; a connected boundary is required")]
    Disconnected { components: usize },

    #[error("fit center lies on the boundary (distance {distance:e})")]
    CenterOnBoundary { distance: f64 },

    #[error("boundary is not star-shaped about the center: element {element} has radial transversality {transversality:e}")]
    NotStarShaped { element: usize, transversality: f64 },

    #[error("measure has {atoms} atoms, above the limit of {limit}")]
    AtomLimit { atoms: usize, limit: usize },

    #[error("sweep failed: {failed} of {total} samples failed (first: {first})")]
    SweepFailed { failed: usize, total: usize, first: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Numerical failures (as opposed to bad input) map to exit code 2 in the CLI.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::SamplingTolerance { .. }
                | Error::CenterOnBoundary { .. }
                | Error::NotStarShaped { .. }
                | Error::NonPositiveVolume(_)
                | Error::SweepFailed { .. }
        )
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
