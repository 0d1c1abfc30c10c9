use std::fmt;
use std::io;

/// Crate-wide error type.
#[derive(Debug)]
pub enum Error {
    /// A continuous-time model failed validation (improper, unstable, ...).
    InvalidSystem(String),
    /// Operands with incompatible dimensions.
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    /// A configuration value violates its documented range.
    InvalidConfig(String),
    /// The time series is too short for the requested (order, horizon) pair.
    SeriesTooShort { required: usize, got: usize },
    /// An operation that requires a nonempty polytope received an empty one.
    EmptyPolytope,
    /// The feasible parameter set at prediction step `p` is unbounded: the
    /// data are not informative enough to bound the worst-case model error.
    UnboundedFps { p: usize },
    /// The LP solver or a downstream numerical routine failed.
    Numerical(String),
    /// File I/O failure.
    Io(io::Error),
    /// A CSV or config file could not be parsed.
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidSystem(msg) => write!(f, "invalid system: {msg}"),
            Error::DimensionMismatch {
                what,
                expected,
                got,
            } => write!(
                f,
                "dimension mismatch in {what}: expected {expected}, got {got}"
            ),
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::SeriesTooShort { required, got } => write!(
                f,
                "time series too short: need at least {required} samples, got {got}"
            ),
            Error::EmptyPolytope => write!(f, "polytope is empty"),
            Error::UnboundedFps { p } => write!(
                f,
                "feasible parameter set for step p={p} is unbounded; the data are not \
                 informative enough to bound the worst-case error, collect more data"
            ),
            Error::Numerical(msg) => write!(f, "numerical failure: {msg}"),
            Error::Io(e) => write!(f, "io error: {e}"),
            Error::Parse(msg) => write!(f, "parse error: {msg}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<io::Error> for Error {
    fn from(e: io::Error) -> Self {
        Error::Io(e)
    }
}
