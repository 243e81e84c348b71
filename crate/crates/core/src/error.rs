//! Error type shared across the solver crate.
//!
//! Configuration errors always name the offending key so CLI users can map a
//! failure straight back to a flag or config entry.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    /// A user-supplied parameter is out of range or inconsistent; `key`
    /// matches the CLI flag / config key spelling.
    #[error("invalid configuration: `{key}`: {reason}")]
    InvalidConfig { key: &'static str, reason: String },

    /// Internal dimension mismatch between vectors or matrices.
    #[error("shape mismatch in {context}: {detail}")]
    Shape {
        context: &'static str,
        detail: String,
    },

    /// The Thomas factorization hit a zero pivot.
    #[error("singular tridiagonal system: zero pivot at row {pivot_index}")]
    SingularMatrix { pivot_index: usize },

    /// The Newton iteration exhausted its iteration budget above tolerance.
    #[error(
        "Newton iteration did not converge at time step {step}: \
         residual {residual:.3e} after {iterations} iterations (tolerance {tolerance:.1e})"
    )]
    NewtonDidNotConverge {
        step: usize,
        residual: f64,
        iterations: usize,
        tolerance: f64,
    },

    /// A computed state or statistic stopped being finite.
    #[error("non-finite value encountered in {context}")]
    NonFinite { context: &'static str },
}
