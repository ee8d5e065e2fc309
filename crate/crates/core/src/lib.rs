//! Finite-population randomization inference for completely randomized,
//! matched-pair and balanced 2^K factorial experiments.
//!
//! Neymanian inference targets the average causal effect with a
//! conservative variance estimate. Fisherian inference tests the sharp null
//! of no effect for any unit by re-randomizing treatment labels with the
//! observed outcomes held fixed. The [`harness`] module runs both on
//! simulated experiments and cross-tabulates their decisions.

pub mod combinatorics;
pub mod design;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod inference;
pub mod io;
pub mod normal;
pub mod population;
pub mod regression;
pub mod rng;

pub use error::{Error, Result};
