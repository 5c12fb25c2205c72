use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can report. Each variant maps to a stable
/// machine-readable code (see [`Error::code`]) used by the CLI and the C API.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite sample near {at:?} (probe too close to the domain boundary?)")]
    NonFiniteSample { at: Vec<f64> },

    #[error("no sign change found within 60 doublings of {hint}")]
    NoBracket { hint: f64 },

    #[error("vector {v:?} lies outside the cone of the curve")]
    OutsideCone { v: Vec<f64> },

    #[error("degenerate direction {v:?}: the ray never leaves the ball")]
    DegenerateDirection { v: Vec<f64> },

    #[error("tangent vector {v:?} at {base:?} is outside the metric domain")]
    OutsideDomain { base: Vec<f64>, v: Vec<f64> },

    #[error("no sampled direction lies in the combined domain at {base:?}")]
    DomainEmpty { base: Vec<f64> },

    #[error("argument s = {s} is outside the profile interval")]
    OutsideProfile { s: f64 },

    #[error("exponent q = {q} is not allowed for {family}")]
    BadExponent { family: String, q: f64 },

    #[error("invalid number of inputs: {0}")]
    InvalidArity(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("curve is not admissible at parameter {parameter}")]
    NotAdmissible { parameter: f64 },

    #[error("fundamental tensor degenerates along the orbit at parameter {parameter}")]
    DegenerateTensor { parameter: f64 },

    #[error("geodesic left the domain at parameter {parameter}")]
    LeftDomain { parameter: f64 },

    #[error("metric is not strongly convex at {base:?}: {reason}")]
    NotConicFinsler { base: Vec<f64>, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}, {path}: {message}")]
    Parse {
        line: usize,
        path: String,
        message: String,
    },

    #[error("validation error at {path}: {constraint}")]
    Validation { path: String, constraint: String },

    #[error("i/o error: {0}")]
    Io(String),
}

/// Coarse grouping used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Domain,
    Numerical,
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::NonFiniteSample { .. } => "E_NON_FINITE_SAMPLE",
            Error::NoBracket { .. } => "E_NO_BRACKET",
            Error::OutsideCone { .. } => "E_OUTSIDE_CONE",
            Error::DegenerateDirection { .. } => "E_DEGENERATE_DIRECTION",
            Error::OutsideDomain { .. } => "E_OUTSIDE_DOMAIN",
            Error::DomainEmpty { .. } => "E_DOMAIN_EMPTY",
            Error::OutsideProfile { .. } => "E_OUTSIDE_PROFILE",
            Error::BadExponent { .. } => "E_BAD_EXPONENT",
            Error::InvalidArity(_) => "E_INVALID_ARITY",
            Error::DimensionMismatch { .. } => "E_DIMENSION_MISMATCH",
            Error::NotAdmissible { .. } => "E_NOT_ADMISSIBLE",
            Error::DegenerateTensor { .. } => "E_DEGENERATE_TENSOR",
            Error::LeftDomain { .. } => "E_LEFT_DOMAIN",
            Error::NotConicFinsler { .. } => "E_NOT_CONIC_FINSLER",
            Error::InvalidArgument(_) => "E_INVALID_ARGUMENT",
            Error::Parse { .. } => "E_PARSE",
            Error::Validation { .. } => "E_VALIDATION",
            Error::Io(_) => "E_IO",
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::OutsideCone { .. }
            | Error::DegenerateDirection { .. }
            | Error::OutsideDomain { .. }
            | Error::DomainEmpty { .. }
            | Error::OutsideProfile { .. }
            | Error::NotAdmissible { .. }
            | Error::LeftDomain { .. }
            | Error::NotConicFinsler { .. } => ErrorKind::Domain,
            Error::NonFiniteSample { .. }
            | Error::NoBracket { .. }
            | Error::DegenerateTensor { .. } => ErrorKind::Numerical,
            Error::BadExponent { .. }
            | Error::InvalidArity(_)
            | Error::DimensionMismatch { .. }
            | Error::InvalidArgument(_)
            | Error::Parse { .. }
            | Error::Validation { .. }
            | Error::Io(_) => ErrorKind::Usage,
        }
    }

    /// Process exit code: 2 for domain errors, 3 for numerical failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            ErrorKind::Usage => 1,
            ErrorKind::Domain => 2,
            ErrorKind::Numerical => 3,
        }
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
