use alloc::string::String;

/// Failure modes shared by every numerical routine in the crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Shapes or lengths that do not line up.
    #[error("dimension error: {0}")]
    Dimension(String),
    /// NaN/Inf encountered, or a factorization that failed to converge.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// An argument outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A precondition on the mathematical content of an input (unitarity, hermiticity).
    #[error("contract violation: {0}")]
    Contract(String),
    /// The request would exceed a configured size cap.
    #[error("resource error: {0}")]
    Resource(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

macro_rules! bail {
    ($kind:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::$kind(alloc::format!($($arg)*)))
    };
}
pub(crate) use bail;
