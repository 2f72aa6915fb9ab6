use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = GltError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum GltError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed bundle: {0}")]
    Bundle(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("forward cache is stale: parameters changed since the forward pass")]
    StaleCache,

    #[error("{phase}: {source}")]
    Phase {
        phase: &'static str,
        #[source]
        source: Box<GltError>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl GltError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        GltError::Io {
            path: path.into(),
            source,
        }
    }
}

/// Attaches a phase label to errors bubbling out of a pipeline stage.
pub trait PhaseContext<T> {
    fn phase(self, phase: &'static str) -> Result<T>;
}

impl<T> PhaseContext<T> for Result<T> {
    fn phase(self, phase: &'static str) -> Result<T> {
        self.map_err(|e| GltError::Phase {
            phase,
            source: Box::new(e),
        })
    }
}
