use thiserror::Error;

/// Errors produced anywhere in the solver, model generation, or training stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid manifest: {0}")]
    Manifest(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("policy error: {0}")]
    Policy(String),

    #[error("layer {t} exceeds the {layers} layers this controller was built for")]
    LayerOverflow { t: usize, layers: usize },

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("trace has {got} layers, expected at least {want}")]
    TruncatedTrace { got: usize, want: usize },

    #[error("gradient estimator: {message}")]
    Estimator { message: String, theta: Vec<f64> },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("training aborted: {0}")]
    TrainingAborted(String),

    #[error("incompatible: {0}")]
    Incompatible(String),

    #[error("unsupported input format: {0}")]
    Format(String),

    #[error("empty result: {0}")]
    Empty(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
