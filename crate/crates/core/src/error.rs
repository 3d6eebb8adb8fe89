//! Error type shared by every library module.

use thiserror::Error;

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Failures reported by the exact-arithmetic pipelines.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,

    #[error("square root of {0} is not representable in Q(i, sqrt2, sqrt3)")]
    NotRepresentable(String),

    #[error("series error: {0}")]
    Series(String),

    #[error("truncation order {have} is insufficient, need at least {need}: {context}")]
    Truncation { have: i64, need: i64, context: String },

    #[error("invalid spectral curve: {0}")]
    InvalidCurve(String),

    #[error("unstable or invalid type (g, n) = ({g}, {n})")]
    Unstable { g: u32, n: usize },

    #[error("missing table entry: {0}")]
    MissingEntry(String),

    #[error("relation error: {0}")]
    Relation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{0}")]
    Invalid(String),
}
