//! Command-line front end: JSON problem specs in, JSON reports and CSV
//! series out.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod app;
pub mod commands;
pub mod error;
pub mod figures;
pub mod report;
pub mod spec;

pub use error::CliError;
pub use spec::ProblemSpec;
