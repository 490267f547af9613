use thiserror::Error;

/// Errors produced by the geometric and algebraic routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid coordinate: {0}")]
    InvalidCoordinate(String),
    #[error("polyline does not close up in the quotient space (endpoint mismatch {0:.3e})")]
    NotALoop(f64),
    #[error("gluing matrix {0} does not admit a Z^3 winding decomposition")]
    UnsupportedGluing(String),
    #[error("invalid gluing matrix: {0}")]
    InvalidGluing(String),
    #[error("invalid contact family: {0}")]
    InvalidFamily(String),
    #[error("derivative h'({z}) = {value:.3e} is degenerate")]
    DegenerateDerivative { z: f64, value: f64 },
    #[error("value {0} outside the representable range of h")]
    Range(f64),
    #[error("homotopy class (0, 0) has no direction")]
    UndefinedDirection,
    #[error("variation needs at least {min} samples, got {got}")]
    InsufficientResolution { min: usize, got: usize },
    #[error("invalid configuration at infinity: {0}")]
    InvalidConfig(String),
    #[error("not a chain complex: {0}")]
    NotAComplex(String),
    #[error("source complex is not equivariant: {0}")]
    NotEquivariant(String),
    #[error("invalid deformation window: {0}")]
    InvalidWindow(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
