use thiserror::Error;

/// Failures raised by the synthesis and simulation pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A point evaluation or parameter fell outside its admissible range.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration value violates a precondition (CFL, skew-symmetry, dimensions).
    #[error("configuration error: {0}")]
    Config(String),

    /// NaN or infinite values appeared in an input or intermediate result.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// An exosystem eigenvalue sits on (or numerically at) a transmission zero
    /// of the plant, so the regulator equations have no solution.
    #[error("invariant zero: |G({omega}i)| = {magnitude:e} is below tolerance {tol:e}")]
    InvariantZero { omega: f64, magnitude: f64, tol: f64 },

    /// No output-injection gain renders the observer block Hurwitz.
    #[error("Hurwitz test failed: {0}")]
    Hurwitz(String),

    /// A structural check of the regulator equations did not hold.
    #[error("synthesis error: {0}")]
    Synthesis(String),

    #[error("argument error: {0}")]
    Argument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
