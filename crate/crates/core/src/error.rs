use thiserror::Error;

/// Crate-wide error type.
///
/// `Io`, `Schema`, and `Invalid` indicate bad inputs or configuration;
/// the remaining variants indicate numerical failures in otherwise valid
/// problems. The CLI maps the two groups to distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("power flow did not converge in {max_iter} iterations (max mismatch {mismatch:.3e} p.u.)")]
    PowerFlowDiverged { max_iter: usize, mismatch: f64 },

    #[error("state estimation did not converge in {max_iter} iterations (|dx| = {delta:.3e})")]
    EstimationDiverged { max_iter: usize, delta: f64 },

    #[error("measurement set is unobservable: gain matrix is rank deficient")]
    Unobservable,

    #[error("singular system in {0}")]
    Singular(String),

    #[error("empty target area: all buses within radius {radius} of bus {bus} are excluded")]
    EmptyTargetArea { bus: i64, radius: usize },
}

impl Error {
    /// True for errors caused by bad inputs or configuration rather than
    /// numerical failure.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Io { .. } | Error::Schema(_) | Error::Invalid(_))
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io { path: path.display().to_string(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
