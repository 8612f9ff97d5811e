use thiserror::Error;

/// Errors raised by the solvers and evaluators in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A caller-supplied argument violates an operation's precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An asymptotic formula was asked for outside the small-rho regime it describes.
    #[error("asymptotic formula requires rho < 1 (got rho = {rho})")]
    RhoOutOfRange { rho: f64 },

    #[error("quadrature did not reach tolerance: estimated error {estimate:.3e} > {tolerance:.3e}")]
    Quadrature { estimate: f64, tolerance: f64 },

    #[error("root bracket not found: {0}")]
    Bracket(String),

    #[error("{solver} did not converge: {detail}")]
    NoConvergence { solver: &'static str, detail: String },

    /// The PDE solution has no exercise region at some positive time.
    #[error("empty exercise region at time index {step}")]
    EmptyExerciseRegion { step: usize },

    #[error("unknown {kind} '{name}' (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error("i/o: {0}")]
    Io(String),

    #[error("malformed input: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Caller mistakes, as opposed to numerical failures.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_)
                | Error::RhoOutOfRange { .. }
                | Error::UnknownStrategy { .. }
                | Error::Io(_)
                | Error::Parse(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
