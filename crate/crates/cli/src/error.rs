use serde_json::{json, Value};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{message}")]
    Parse { message: String, context: Value },
    #[error("invalid configuration: {}", .0.join("; "))]
    Validation(Vec<String>),
    #[error("site {site_id}: {reason}")]
    InvalidMatrix { site_id: String, reason: String },
    #[error("{sites} sites but {matrices} matrix rows")]
    RowCountMismatch { sites: usize, matrices: usize },
    #[error("{path}: {message}")]
    Input { path: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] rddmk::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn input(path: &std::path::Path, message: impl Into<String>) -> Self {
        CliError::Input {
            path: path.display().to_string(),
            message: message.into(),
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Parse { .. } => "parse_error",
            CliError::Validation(_) => "validation_error",
            CliError::InvalidMatrix { .. } => "invalid_matrix",
            CliError::RowCountMismatch { .. } => "row_count_mismatch",
            CliError::Input { .. } => "invalid_input",
            CliError::Io { .. } => "io_error",
            CliError::Core(e) => core_code(e),
        }
    }

    pub fn context(&self) -> Value {
        match self {
            CliError::Parse { context, .. } => context.clone(),
            CliError::Validation(v) => json!({ "violations": v }),
            CliError::InvalidMatrix { site_id, reason } => json!({ "site_id": site_id, "reason": reason }),
            CliError::RowCountMismatch { sites, matrices } => json!({ "sites": sites, "matrices": matrices }),
            CliError::Input { path, .. } | CliError::Io { path, .. } => json!({ "path": path }),
            CliError::Usage(_) | CliError::Core(_) => json!({}),
        }
    }

    /// `{code, message, context}` as written to stderr.
    pub fn to_json(&self) -> Value {
        json!({ "code": self.code(), "message": self.to_string(), "context": self.context() })
    }

    /// 2 for problems with the invocation or configuration, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Parse { .. } | CliError::Validation(_) => 2,
            _ => 1,
        }
    }
}

fn core_code(e: &rddmk::Error) -> &'static str {
    use rddmk::Error::*;
    match e {
        NotSymmetric(_) => "not_symmetric",
        NotPD { .. } => "not_positive_definite",
        NotCorrelation { .. } => "not_correlation",
        InvalidPoint(_) => "invalid_point",
        DimensionMismatch { .. } => "dimension_mismatch",
        EigenNoConvergence(_) => "eigen_no_convergence",
        Overflow(_) => "overflow",
        SingularSystem(_) => "singular_system",
        AntipodalPoint { .. } => "antipodal_point",
        NoConvergence { .. } => "no_convergence",
        DegenerateMean { .. } => "degenerate_mean",
        Empty(_) => "empty_input",
        DegenerateInput(_) => "degenerate_input",
        DisconnectedGraph(_) => "disconnected_graph",
        PartitionInfeasible(_) => "partition_infeasible",
        NoPairs => "no_pairs",
        FitFailed(_) => "fit_failed",
        FactorizationFailure => "factorization_failure",
        AggregationFailure { .. } => "aggregation_failure",
        PreconditionViolation(_) => "precondition_violation",
    }
}
