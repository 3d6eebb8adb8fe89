//! Exact topological recursion on rational spectral curves, KdV tau-function
//! tables, and Θ-class intersection numbers computed by two independent
//! pipelines.

pub mod curve;
pub mod error;
pub mod exact;
pub mod givental;
pub mod graphs;
pub mod recursion;
pub mod series;
pub mod tau;
pub mod theta;

pub use error::{Error, Result};
pub use exact::{ExtScalar, Rational};
