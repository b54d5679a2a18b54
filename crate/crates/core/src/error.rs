use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("geometry error in cell {cell}: {reason}")]
    Geometry { cell: usize, reason: String },

    #[error("topology error: {0}")]
    Topology(String),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("singular cell {cell}: least-squares normal matrix is rank deficient")]
    SingularCell { cell: usize },

    #[error("cell {cell} is not star-shaped with respect to its internal node (fan triangle {triangle})")]
    StarShapeViolation { cell: usize, triangle: usize },

    #[error("coefficient error: {0}")]
    Coefficient(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("solver error: {reason} (relative residual {residual:e})")]
    Solver { reason: String, residual: f64 },

    #[error("step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("problem `{0}` has no exact solution")]
    UnsupportedProblem(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn geometry(cell: usize, reason: impl Into<String>) -> Self {
        Error::Geometry {
            cell,
            reason: reason.into(),
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Strips `Step` and `Context` wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Step { source, .. } | Error::Context { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn is_solver_error(&self) -> bool {
        matches!(self.root(), Error::Solver { .. })
    }

    pub fn is_config_error(&self) -> bool {
        matches!(
            self.root(),
            Error::Config(_) | Error::InvalidParameter(_) | Error::UnsupportedProblem(_)
        )
    }
}
