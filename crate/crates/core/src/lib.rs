//! Stability certificates for fuzzy Caputo fractional differential equations.

// NaN must fail the range checks, so `!(x > 0.0)` is used on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod config;
pub mod error;
pub mod expr;
pub mod fuzzy;
pub mod harness;
pub mod solver;
pub mod mlf;
pub mod quad;
pub mod special;

pub use error::{Error, Result};
