use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("argument {value} outside the interval [-1, 1]")]
    Domain { value: f64 },

    #[error("harmonic index out of range: degree {degree}, order index {order}")]
    Index { degree: usize, order: usize },

    #[error("radius {target} lies below the anchor radius {anchor}")]
    Radius { target: f64, anchor: f64 },

    #[error("field was sampled on a different quadrature rule")]
    RuleMismatch,

    #[error("zero-norm input: {0}")]
    ZeroNorm(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) => 1,
            Error::Parse { .. } | Error::Io(_) => 2,
            Error::Domain { .. }
            | Error::Index { .. }
            | Error::Radius { .. }
            | Error::RuleMismatch
            | Error::ZeroNorm(_) => 2,
            Error::Numerical(_) => 3,
        }
    }
}
