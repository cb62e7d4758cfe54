use std::path::PathBuf;

/// Errors produced by mesh construction, the solver, diagnostics and the harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error(
        "linear solver did not converge: {iterations} iterations, relative residual {residual:.3e}"
    )]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("numerical blow-up: non-finite value in `{field}` at t = {t}")]
    NumericalBlowup { field: &'static str, t: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command line front end:
    /// 1 for configuration problems, 2 for numerical failures, 3 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::Unsupported(_) | Error::Config(_) => 1,
            Error::SolverFailure { .. } | Error::NumericalBlowup { .. } => 2,
            Error::Parse { .. } | Error::Io { .. } => 3,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
