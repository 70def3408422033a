//! Random frequently hypercyclic vectors for weighted shift operators.
//!
//! The crate builds random vectors `v = Σ X_n u_n` from i.i.d. coefficient
//! streams and backward-orbit families (`T u_n = u_{n-1}`), checks the series
//! and tail conditions that make such vectors well defined as numeric
//! certificates, and estimates visit frequencies and mixing correlations by
//! simulating exact orbits in coefficient space.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod delta;
pub mod distributions;
pub mod dynamics;
pub mod error;
pub mod export;
pub mod fhc;
pub mod random_vectors;
pub mod rng;
pub mod scalar;
pub mod series;
pub mod shift;
pub mod space;

pub use error::{Error, Result};
pub use scalar::{Scalar, ScalarField, SignedLogScalar};
pub use series::Verdict;
pub use space::{SpaceFamily, SpaceSpec, TruncatedVector};
