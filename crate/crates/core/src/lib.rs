//! Maxmin payoff guarantees over ambiguity sets of priors, their robustness to
//! weak perturbations, and robustified monopoly pricing.
//!
//! States live on a finite [`measures::Grid`]. Worst-case expectations are
//! linear programs over the prior weights ([`guarantee`]), robustness is
//! decided by comparing against windowed lower envelopes ([`robustness`]),
//! and [`mechanisms`] provides the monopoly and persuasion value functions.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ambiguity;
pub mod error;
pub mod guarantee;
pub mod measures;
pub mod mechanisms;
pub mod optim;
pub mod robustness;

pub use error::{Error, Result};
