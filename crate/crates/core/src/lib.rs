//! Numerical companion to the asymptotic formula for sums of floor prime
//! powers `[p₁^c] + … + [p_s^c] = N`.
//!
//! - [`exponent`]: exact exponent-pair calculus and the admissible range of `c`.
//! - [`floorpow`] and [`table`]: certified `[p^c]` values over primes.
//! - [`counting`]: exact representation and equal-sum counts.
//! - [`analytic`]: exponential sums and the Gamma-function main term.

pub mod analytic;
pub mod conv;
pub mod counting;
pub mod error;
pub mod exponent;
pub mod floorpow;
pub mod rational;
pub mod sieve;
pub mod summation;
pub mod table;

pub use error::{Error, Result};
pub use exponent::{eval_word, max_c_type_i, parse_word, type_ii_theta, ExponentPair, ProcessWord, TypeIConstraint};
pub use floorpow::{floor_pow, PrecisionPolicy};
pub use rational::Rational;
pub use table::{build_table, chebyshev_theta, FloorPowerTable, WeightMode};
