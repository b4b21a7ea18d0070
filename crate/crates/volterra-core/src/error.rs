//! Error type shared by every module of the crate.

use core::fmt;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

/// Failure modes of the numerical routines.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument violated a documented precondition.
    Domain(&'static str),
    /// The operation is undefined on the degenerate `alpha = 0` branch.
    UnsupportedBranch(&'static str),
    /// The result is not representable in `f64` without scaling.
    Range(&'static str),
    /// A mollifier or test-function construction failed at a given level.
    Construction { level: usize, msg: &'static str },
    /// Adaptive quadrature did not reach the requested tolerance; carries
    /// the abscissa of the worst remaining subinterval.
    Quadrature { worst_point: f64, msg: &'static str },
    /// The time-stepping state left the representable range.
    BlowUp { step: usize },
    /// Input data (coefficient tables, meshes) was malformed.
    Data(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::UnsupportedBranch(msg) => write!(f, "unsupported branch: {msg}"),
            Error::Range(msg) => write!(f, "range error: {msg}"),
            Error::Construction { level, msg } => {
                write!(f, "construction failed at level {level}: {msg}")
            }
            Error::Quadrature { worst_point, msg } => {
                write!(f, "quadrature failure near {worst_point}: {msg}")
            }
            Error::BlowUp { step } => write!(f, "non-finite state at step {step}"),
            Error::Data(msg) => write!(f, "data error: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
