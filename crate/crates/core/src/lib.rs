// NaN-rejecting guards are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod metrics;
pub mod predictor;
pub mod routing;
pub mod scenario;
pub mod verification;
pub mod warning;

pub use error::{Error, Result};
