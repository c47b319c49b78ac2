//! Recursive Poisson asymptotic expansions of `E[h(W)]` for `W = X_1 + ... + X_n`
//! a sum of independent, finitely supported, nonnegative-integer random variables.
//!
//! The expansion is driven by the Poisson zero bias transformation
//! `P(X* = x) = (x + 1) P(X = x + 1) / E[X]` together with the discrete Taylor
//! (Newton) formula and its reverse. Every quantity is exact up to floating
//! rounding and certified Poisson-tail truncation, so each identity can be
//! checked against an independent brute-force oracle.
//!
//! Module map:
//!
//! - [`dist`]: finite pmfs, convolution, binomial moments, zero bias transform.
//! - [`stein`]: tabulated test functions, forward differences, Poisson
//!   expectations and solutions of the Stein–Chen equation.
//! - [`composition`]: multi-indices of positive integers.
//! - [`expansion`]: Taylor remainders and the recursive expansion `C_N`, `e_N`.
//! - [`bounds`]: seminorms and remainder bounds.
//! - [`oracle`]: independent ground truth.
//! - [`report`]: JSON problem configs and reports used by the CLI.

pub mod bounds;
pub mod composition;
pub mod dist;
pub mod error;
pub mod expansion;
pub mod oracle;
pub mod report;
pub mod stein;
mod sum;

pub use composition::{enumerate_compositions, Composition};
pub use dist::{convolve, FinitePmf, MomentKey};
pub use error::{Error, Result};
pub use expansion::{expand, ExpansionReport, OrderRecord, SumModel};
pub use stein::{FunctionSpec, GrowthEnvelope, SteinContext, TabulatedFunction};
