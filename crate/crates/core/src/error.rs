use thiserror::Error;

/// Errors raised by the numerical and geometric routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix is not positive definite (min eigenvalue {min_eigenvalue:e})")]
    NotPD { min_eigenvalue: f64 },
    #[error("matrix is not a correlation matrix: diagonal entry {index} is {value}")]
    NotCorrelation { index: usize, value: f64 },
    #[error("invalid manifold point: {0}")]
    InvalidPoint(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("jacobi eigensolver did not converge after {0} sweeps")]
    EigenNoConvergence(usize),
    #[error("matrix exponential overflow (largest eigenvalue {0})")]
    Overflow(f64),
    #[error("singular linear system (pivot {0:e})")]
    SingularSystem(f64),
    #[error("antipodal points: logarithm undefined{}", column.map(|c| format!(" in column {c}")).unwrap_or_default())]
    AntipodalPoint { column: Option<usize> },
    #[error("intrinsic mean did not converge after {iterations} iterations (gradient norm {gradient_norm:e})")]
    NoConvergence { iterations: usize, gradient_norm: f64 },
    #[error("degenerate extrinsic mean in column {column}")]
    DegenerateMean { column: usize },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("disconnected graph: {0}")]
    DisconnectedGraph(String),
    #[error("no feasible partition after {0} attempts")]
    PartitionInfeasible(usize),
    #[error("empirical variogram has no populated lag bin")]
    NoPairs,
    #[error("variogram fit failed: {0}")]
    FitFailed(String),
    #[error("grf covariance factorization failed after jitter escalation")]
    FactorizationFailure,
    #[error("aggregation failed at target {target}: {source}")]
    AggregationFailure { target: usize, source: Box<Error> },
    #[error("precondition violated: {0}")]
    PreconditionViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
