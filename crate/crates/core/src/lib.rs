//! Finite discretizations of Schrödinger operators `H(β) = H₀ + Σᵢ βᵢVᵢ`
//! with a (truncated) infinite sequence of coupling parameters.
//!
//! The crate is organised bottom-up:
//!
//! * [`lattice`] builds grids, the Dirichlet Laplacian and assembles `H(β)`.
//! * [`geometry`] handles support families: intersection statistics, the
//!   unit-ball overlap count, disjoint refinements and sphere-packing counts.
//! * [`potentials`] holds potential profiles, Stummel norms, the weighted-sum
//!   closure bound and certified tail sums for decaying potentials.
//! * [`bounds`] estimates Kato relative bounds and certifies resolvent points.
//! * [`analytic`] does the contour work: Riesz projectors, eigenvalue
//!   tracking, directional Taylor coefficients and analyticity checks.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod bounds;
pub mod dense;
pub mod error;
pub mod geometry;
pub mod lattice;
pub mod potentials;
pub mod quadrature;
pub mod rng;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Version of the structured-text schema understood by this crate.
pub const SCHEMA_VERSION: u32 = 1;
