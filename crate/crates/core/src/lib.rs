//! Interpolation models for model-based derivative-free optimization.
//!
//! The crate builds determined linear and quadratic interpolation models and
//! minimum Frobenius norm (MFN) underdetermined quadratics, measures the
//! Λ-poisedness of sample sets, evaluates the closed-form error-bound
//! constants for each model class, and checks those bounds empirically.

// NaN must fail the positivity checks, hence the negated comparisons.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ball;
pub mod bounds;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod models;
pub mod par;
pub mod poly;
pub mod verify;

pub use error::{Error, Result};
pub use poly::QuadraticPolynomial;
