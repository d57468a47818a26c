use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A parameter lies outside the domain where a closed form is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric instability: {0}")]
    NumericInstability(String),

    #[error("state is pure or nearly pure (det A = {det_a}); the Gaussian QFI formula needs a mixed state")]
    UnsupportedPureState { det_a: f64 },

    #[error("degenerate state: {0}")]
    DegenerateState(String),

    #[error("state carries no information about the parameter (H = {0})")]
    NoInformation(f64),

    #[error("Fock cutoff {cutoff} too small: tail mass {tail:e} exceeds {limit:e} (need at least {required})")]
    CutoffTooSmall {
        cutoff: usize,
        required: usize,
        tail: f64,
        limit: f64,
    },

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
