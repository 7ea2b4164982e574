use thiserror::Error;

/// Errors produced anywhere in the nulling pipeline.
#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid feed: {0}")]
    InvalidFeed(String),

    #[error("invalid direction: {0}")]
    InvalidDirection(String),

    #[error("feed polarization is singular at this surface point (s_hat parallel to y_hat)")]
    PolarizationSingularity,

    #[error("quadrature did not converge: {change_db:.4} dB change under 2x refinement (tolerance {tolerance_db} dB)")]
    QuadratureNotConverged { change_db: f64, tolerance_db: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid weight vector: {0}")]
    InvalidWeights(String),

    #[error("search space of {levels}^{elements} candidates exceeds the enumeration limit")]
    SearchSpaceTooLarge { elements: usize, levels: usize },

    #[error("invalid annealing config: {0}")]
    InvalidAnnealConfig(String),

    #[error("empty batch")]
    EmptyBatch,

    #[error("invalid training setup: {0}")]
    InvalidTraining(String),

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("model file: {0}")]
    Model(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit status: 2 for bad input, 3 for numerical failure, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::PolarizationSingularity | Error::QuadratureNotConverged { .. } | Error::Diverged { .. } => 3,
            Error::Io(_) | Error::Json(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
