use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the imaging pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("missing element in subarray")]
    MissingElementInSubarray,

    #[error("invalid array geometry: {0}")]
    InvalidGeometry(String),

    #[error("direction out of range: elevation {elevation} rad, azimuth {azimuth} rad")]
    DirectionOutOfRange { elevation: f64, azimuth: f64 },

    #[error("scene exceeds tap window")]
    SceneExceedsTapWindow,

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("degenerate empty reference")]
    DegenerateEmptyReference,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("empty snapshot list")]
    EmptySnapshots,

    #[error("invalid source order {order} for {dim}-element subarray")]
    InvalidSourceOrder { order: usize, dim: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("malformed tensor container: {0}")]
    Container(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("manifest verification failed: {0}")]
    ManifestMismatch(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
