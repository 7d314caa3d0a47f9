//! Numerical toolkit for deciding whether a sampled decomposable operator
//! (one complex matrix per sample point of a partitioned space) is similar to
//! a direct integral of strongly irreducible operators.
//!
//! The decision rests on bounded maximal abelian sets of idempotents in the
//! commutant: [`decomposer::decide`] either produces such a set together with
//! orthogonalizing similarities and a splitting into single Jordan blocks, or
//! exhibits a central idempotent whose norm exceeds the requested bound.

pub mod commutant;
pub mod decomposer;
pub mod error;
pub mod field;
pub mod idempotent;
pub mod io;
pub mod matrix;
pub mod si;
pub mod spectral;

pub use error::{Error, Result};
pub use matrix::{CMatrix, Tolerances};

pub const TOOL_VERSION: &str = concat!("sidecomp ", env!("CARGO_PKG_VERSION"));
