//! Combinatorial-dimension profiles of monomial index sets and numerical
//! checks of the restricted Bohnenblust–Hille inequality and the chain of
//! estimates behind it.
//!
//! - [`index`]: multi-indices, exponent vectors, index-set families and the `.idx` format
//! - [`combdim`]: exact and heuristic psi(n), growth-exponent fits
//! - [`poly`], [`supnorm`]: sparse polynomials, multilinear forms, torus sup norms
//! - [`bounds`], [`verify`]: closed-form constants and the per-step verifier
//! - [`report`], [`cli`]: JSON/CSV output and the `bhlab` command line

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod cli;
pub mod combdim;
pub mod error;
pub mod index;
pub mod poly;
pub mod report;
pub mod rng;
pub mod supnorm;
pub mod verify;

pub use error::{Error, Result};
