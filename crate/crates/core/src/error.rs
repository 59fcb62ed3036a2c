use thiserror::Error;

/// Errors surfaced by construction, evaluation, and training.
#[derive(Debug, Error)]
pub enum Error {
    #[error("network must have at least one neuron")]
    EmptyNetwork,
    #[error("parameter containers disagree on neuron count: a0={a0}, b0={b0}, a1={a1}")]
    MismatchedParams { a0: usize, b0: usize, a1: usize },
    #[error("non-finite parameter entry")]
    NonFiniteParam,
    #[error("mesh breakpoints must be strictly increasing with at least one element")]
    InvalidMesh,
    #[error("element index {index} out of range (mesh has {elements} elements)")]
    ElementOutOfRange { index: usize, elements: usize },
    #[error("gauss order {0} unsupported (must be 1..=5)")]
    UnsupportedGaussOrder(usize),
    #[error("quadrature rule needs at least one point")]
    EmptyRule,
    #[error("integrand evaluated to a non-finite value at x = {x}")]
    NonFiniteIntegrand { x: f64 },
    #[error("training loss became non-finite at iteration {iteration}")]
    Diverged { iteration: usize },
    #[error("regularizer requires finite ‖f‖∞, ‖f′‖∞; problem '{problem}' has unbounded data")]
    UnboundedSourceData { problem: String },
    #[error("problem '{0}' has no exact solution to compare against")]
    MissingExactSolution(String),
    #[error("unknown problem preset '{0}'")]
    UnknownProblem(String),
    #[error("unknown experiment preset '{0}'")]
    UnknownPreset(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
