//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite value {value} at node {index} (r = {radius})")]
    NonFiniteSample {
        index: usize,
        radius: f64,
        value: f64,
    },

    #[error("shape mismatch: expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("grid too small: {0}")]
    GridTooSmall(String),

    #[error("constraint violated: {what} (residual {residual:.3e})")]
    ConstraintViolated { what: String, residual: f64 },

    #[error("mass mismatch between densities: {mass0} vs {mass1}")]
    MassMismatch { mass0: f64, mass1: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("too many points: {got} (brute-force limit is {limit})")]
    TooManyPoints { got: usize, limit: usize },

    #[error("time step rejected: density went negative in cell {cell}; retry with dt <= {suggested_dt:.3e}")]
    StepRejected { cell: usize, suggested_dt: f64 },

    #[error("line search failed after {halvings} halvings at iteration {iteration} (objective would not decrease)")]
    LineSearchFailed { iteration: usize, halvings: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
