use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("working model has no planes")]
    EmptyModel,

    #[error("invalid working model: {0}")]
    InvalidModel(String),

    #[error("bundle policy cannot hold the mandatory planes: {0}")]
    BundleTooSmall(String),

    #[error("non-finite value or subgradient at {context}")]
    NonFinite { context: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("starting point is not feasible (max violation {violation:e})")]
    Infeasible { violation: f64 },

    #[error("tangent program failed: {0}")]
    NumericalFailure(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("trial point violates the admissibility rule: {0}")]
    TrialRule(String),

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    #[error("invalid problem parameters: {0}")]
    ProblemParams(String),

    #[error("evaluation outside the domain: {0}")]
    Domain(String),

    #[error("at outer iteration {outer}, inner iteration {inner}: {source}")]
    AtIteration {
        outer: usize,
        inner: usize,
        #[source]
        source: Box<SolverError>,
    },
}

pub type Result<T> = std::result::Result<T, SolverError>;
