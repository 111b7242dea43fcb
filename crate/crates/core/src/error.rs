use alloc::string::String;
use core::fmt;

/// Errors raised by the symbolic engine.
///
/// The variants follow the failure classes of the rewrite passes: malformed
/// IR, rewrites applied outside their domain, API misuse, and invalid
/// system descriptions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// A subsystem label or family name does not have the `A1` / `F` shape.
    InvalidLabel(String),
    /// The IR violates a structural invariant (duplicate index, overlapping
    /// product factors, empty correlation, ...).
    Structural(String),
    /// A rewrite was applied to an argument outside its domain, e.g. tracing
    /// a density matrix over a subsystem it does not describe.
    Domain(String),
    /// The operation was called with an argument its contract excludes.
    Usage(String),
    /// The system description or derivation target is invalid.
    Spec(String),
}

impl Error {
    pub(crate) fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn spec(msg: impl Into<String>) -> Self {
        Error::Spec(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidLabel(s) => write!(f, "invalid label: {s}"),
            Error::Structural(s) => write!(f, "malformed term: {s}"),
            Error::Domain(s) => write!(f, "domain error: {s}"),
            Error::Usage(s) => write!(f, "usage error: {s}"),
            Error::Spec(s) => write!(f, "specification error: {s}"),
        }
    }
}

impl core::error::Error for Error {}
