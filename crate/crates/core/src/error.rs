use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A model or configuration parameter violates its documented range.
    #[error("invalid parameter `{field}`: {reason}")]
    Parameter { field: String, reason: String },

    /// An operation was called outside its precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Nonlinear least squares stopped without meeting the convergence test.
    #[error("fit did not converge after {iterations} iterations (cost {cost:.6e})")]
    FitDivergence {
        iterations: usize,
        cost: f64,
        best_params: Vec<f64>,
        cost_history: Vec<f64>,
    },

    #[error("{source_name}:{line}: {reason}")]
    Parse {
        source_name: String,
        line: usize,
        reason: String,
    },

    #[error("invalid data: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Process exit code for the command-line front end.
    ///
    /// `2` covers usage, configuration and input-data problems; `3` covers
    /// numerical failures (eigensolver, singular operators, fits).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical(_) | Error::FitDivergence { .. } => 3,
            _ => 2,
        }
    }
}
