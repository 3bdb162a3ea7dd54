use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("exponent p must satisfy p >= 2, got {0}")]
    InvalidExponent(f64),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// The ray `t ↦ I(t u)` has no interior critical point when `V₀(u) ≥ 0`.
    #[error("field is not Nehari-projectable: V0 = {v0:e} is not negative")]
    NotNehariProjectable { v0: f64 },

    #[error("zero field where a nonzero field is required")]
    ZeroField,

    #[error("no initial guess with V0 < 0 found: {0}")]
    NoInitialGuess(String),

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("plane position {0} is not lattice-compatible")]
    InvalidPlane(f64),

    #[error("node ({0}, {1}) is not in the upper half plane")]
    NotUpperNode(isize, isize),

    #[error("annulus {inner} <= |x| <= {outer} contains no usable nodes")]
    EmptyAnnulus { inner: f64, outer: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed field file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
