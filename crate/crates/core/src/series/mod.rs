//! Series algebra: truncated Laurent series, polynomials and rational
//! functions over K, and truncated multivariate series for tau functions.

pub mod laurent;
pub mod multi;
pub mod poly;

pub use laurent::{LaurentSeries, EXACT};
pub use multi::MultiSeries;
pub use poly::{Poly, RatFunc};
