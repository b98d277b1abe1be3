//! Command-line front end, CSV handling and parallel drivers for
//! `crisk-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod io;
pub mod parallel;
pub mod report;

pub use error::CliError;
