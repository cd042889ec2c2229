use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point is outside the feasible set: {0}")]
    Infeasible(String),

    #[error("prox-function gradient undefined at boundary point (coordinate {index})")]
    BoundaryGradient { index: usize },

    #[error("scaling parameter must be positive, got {0}")]
    NonPositiveBeta(f64),

    #[error("weight parameter must be positive, got {0}")]
    NonPositiveLambda(f64),

    #[error("scaling parameter decreased from {previous} to {next}")]
    DecreasingBeta { previous: f64, next: f64 },

    #[error("unsupported subproblem: {0}")]
    UnsupportedSubproblem(String),

    #[error("invalid setup: {0}")]
    InvalidSetup(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("zero subgradient at iteration {k}: the test point is optimal")]
    OptimalPointDetected { k: usize },

    #[error("step condition violated at iteration {k}: {lhs} < L = {lipschitz}")]
    StepCondition { k: usize, lhs: f64, lipschitz: f64 },

    #[error("method/problem mismatch: {0}")]
    MethodMismatch(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("certification input missing: {0}")]
    MissingCertificateInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
