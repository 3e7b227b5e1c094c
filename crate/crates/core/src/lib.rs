//! Geodesic-control quantum frequency sensing: pulse sequences, two-level
//! sensor dynamics, filter functions and frequency estimation, with XY and
//! CPMG dynamical decoupling as baselines.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod estimation;
pub mod experiments;
pub mod filter;
pub mod sequence;
pub mod signal;

pub use error::{Error, Result};
