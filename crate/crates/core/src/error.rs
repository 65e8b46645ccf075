use std::fmt;

/// Error conditions surfaced by the library.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter violated a domain precondition (speed <= 0, omega = 0, ...).
    Domain(String),
    /// Rule expansion would exceed the configured label cap.
    LengthCapExceeded { requested: u64, cap: u64 },
    /// A custom rule referenced a level that is not strictly earlier.
    InvalidRule(String),
    /// Real eigenvectors were requested for an elliptic matrix.
    NotHyperbolic { trace: f64 },
    /// The frequency is not certified to lie in a spectral gap.
    NotInGap { omega: f64 },
    /// No level of the transfer-matrix sequence classified as hyperbolic.
    NeverHyperbolic { omega: f64, max_level: u32 },
    /// Grid step does not divide the unit-cell boundaries.
    IncommensurateStep { h: f64 },
    /// The eigensolver failed to converge for a given pair index.
    SolverFailure { index: usize, detail: String },
    /// File or serialization problem.
    Io(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::LengthCapExceeded { requested, cap } => {
                write!(f, "expansion length {requested} exceeds cap {cap}")
            }
            Error::InvalidRule(msg) => write!(f, "invalid tiling rule: {msg}"),
            Error::NotHyperbolic { trace } => {
                write!(f, "matrix with trace {trace} is not hyperbolic")
            }
            Error::NotInGap { omega } => {
                write!(f, "omega = {omega} is not certified to lie in a spectral gap")
            }
            Error::NeverHyperbolic { omega, max_level } => write!(
                f,
                "no hyperbolic level found for omega = {omega} up to level {max_level}"
            ),
            Error::IncommensurateStep { h } => {
                write!(f, "step h = {h} does not evenly divide cell boundaries")
            }
            Error::SolverFailure { index, detail } => {
                write!(f, "eigensolver failed at pair {index}: {detail}")
            }
            Error::Io(msg) => write!(f, "io error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
