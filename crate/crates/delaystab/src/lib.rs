//! File formats and command implementations behind the `delaystab` binary.
//!
//! Every command is a thin composition of `delaystab-core` calls: it parses
//! a problem, calls the core, and writes JSON reports or CSV trajectories.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod error;
pub mod output;
pub mod problem;

pub use crate::error::CliError;
