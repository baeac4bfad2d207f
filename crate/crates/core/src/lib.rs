//! Differential operators with limited-smoothness coefficients.
//!
//! The crate represents operators `P = Σ a_α(x) ∂^α`, recovers them from
//! black-box evaluations by probing with monomials, and decides which of the
//! three `C^m → C^r` regimes an operator belongs to using exact piecewise
//! polynomial witnesses.

pub mod classify;
pub mod cli;
pub mod diffop;
pub mod error;
pub mod jets;
pub mod locality;
pub mod multiindex;
pub mod poly;
pub mod pwpoly;
pub mod random;
pub mod reconstruct;
pub mod scalar;
pub mod smoothness;

pub use error::{Error, Result};
pub use multiindex::MultiIndex;
pub use scalar::{Rational, Scalar};
pub use smoothness::Smoothness;
