use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter violates a model invariant. `key` is the user-facing name.
    #[error("invalid parameter `{key}`: {reason}")]
    InvalidParameter { key: String, reason: String },

    #[error("total spin linewidth (dephasing + pumping) is zero; a lossless spin is unphysical")]
    ZeroLinewidth,

    #[error("sweep axis `{0}` is empty or not monotone")]
    BadAxis(String),

    #[error("no operating point: {0}")]
    NoOperatingPoint(String),

    #[error("polariton branch `{0}` does not exist in this model")]
    BranchNotFound(String),

    #[error("root finder failed: {0}")]
    RootFinder(String),
}

impl Error {
    pub(crate) fn param(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            key: key.into(),
            reason: reason.into(),
        }
    }

    /// True for failures of a numerical solver, as opposed to bad input.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::NoOperatingPoint(_) | Error::RootFinder(_) | Error::BranchNotFound(_)
        )
    }
}
