//! Stability certificates and numerical integration for scalar delay
//! differential equations with a non-delay term,
//!
//! ```text
//! x'(t) + a(t) x(t) + sum_k b_k(t) x(h_k(t)) = 0,
//! ```
//!
//! together with distributed-delay, integro-differential and nonlinear
//! variants and the Mackey-Glass respiratory model.
//!
//! The crate is `no_std` and only needs `alloc`. Everything that touches
//! files, the terminal or threads lives in the `delaystab` crate.
//!
//! Modules:
//!
//! - [`model`]: declarative problem descriptions (coefficients, delays, kernels,
//!   nonlinearities, initial histories).
//! - [`criteria`]: sufficient exponential-stability and global-attractivity
//!   inequalities, limsup estimation, closed-form delay bounds.
//! - [`solver`]: fixed-step method-of-steps integrator with cubic Hermite
//!   dense output.
//! - [`analysis`]: trajectory diagnostics and exact recursions for the
//!   piecewise-constant-argument example.
//! - [`mackeyglass`]: equilibrium, bounds and attractivity constants for the
//!   Mackey-Glass model.

#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod criteria;
mod error;
pub mod mackeyglass;
pub mod model;
mod quadrature;
#[cfg(feature = "serde")]
pub mod serde_float;
pub mod solver;

pub use crate::error::{Error, Result};
