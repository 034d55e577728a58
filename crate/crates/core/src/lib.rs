//! Dynamic movement primitives with obstacle-avoidance perturbations.

// `!(x > 0.0)` is used throughout so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod avoidance;
pub mod basis;
pub mod cli;
pub mod dmp;
pub mod error;
pub mod metrics;
pub mod obstacles;
pub mod phase;
pub mod sim;

pub use error::{Error, ErrorKind, Result};
