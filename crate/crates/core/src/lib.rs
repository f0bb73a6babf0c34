//! Partial-spread bent functions over F₂ⁿ, the extremal Forrelation instances
//! built from them, the collision games used to lower-bound their classical
//! query complexity, exact counting bounds, and the generalized Simon's
//! problem.

pub mod analysis;
pub mod bent;
pub mod error;
pub mod field;
pub mod forrelation;
pub mod games;
pub mod gf2;
pub mod gsp;
pub mod scalar;
pub mod seed;
pub mod spreads;

pub use error::{Error, Result};

/// Exact rational with canonical sign and reduced form.
pub type ExactRational = num_rational::BigRational;
/// Arbitrary-precision nonnegative count.
pub type BigCount = num_bigint::BigUint;
pub type ExactBinDistribution = analysis::BinDistribution<ExactRational>;
pub type BinDistributionF64 = analysis::BinDistribution<f64>;
