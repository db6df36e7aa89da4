//! Error type shared across the crate.

use std::fmt;

/// Errors produced by the simulator library.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A scalar argument was outside its mathematical domain.
    Domain(String),
    /// Vector/matrix dimensions do not match the configured system size.
    Dimension(String),
    /// An operation requires a configuration the module does not support
    /// (e.g. the single-antenna closed forms called with M > 1).
    UnsupportedConfiguration(String),
    /// A closed-form solution is requested outside its stated regime.
    OutOfRegime(String),
    /// A constraint set could not be constructed (e.g. Big-M constant too
    /// small for the attainable coefficient range).
    ConstraintConstruction(String),
    /// An optimization problem has an empty feasible set.
    Infeasible(String),
    /// Configuration file errors (parse or semantic).
    Config(String),
    /// I/O errors, tagged with the offending path.
    Io(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(m) => write!(f, "domain error: {m}"),
            Error::Dimension(m) => write!(f, "dimension mismatch: {m}"),
            Error::UnsupportedConfiguration(m) => write!(f, "unsupported configuration: {m}"),
            Error::OutOfRegime(m) => write!(f, "out of regime: {m}"),
            Error::ConstraintConstruction(m) => write!(f, "constraint construction: {m}"),
            Error::Infeasible(m) => write!(f, "infeasible: {m}"),
            Error::Config(m) => write!(f, "config error: {m}"),
            Error::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
