use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("degenerate embedding: {0}")]
    DegenerateEmbedding(String),

    #[error("value {0} overflows binary16 range")]
    PrecisionOverflow(f32),

    #[error("raw output row width {actual} does not match layout width {expected}")]
    Layout { expected: usize, actual: usize },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("frame {got} is not after previously processed frame {previous}")]
    FrameOrder { previous: usize, got: usize },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("measurement error: {0}")]
    Measurement(String),

    #[error("pipeline stage `{stage}` failed: {message}")]
    Stage { stage: &'static str, message: String },

    #[error("pipeline stage `{0}` panicked")]
    StagePanic(&'static str),

    #[error("queue aborted")]
    QueueAborted,

    #[error("queue already drained past end-of-stream")]
    QueueDrained,

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
