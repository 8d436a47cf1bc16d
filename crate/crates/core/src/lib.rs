// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cbf;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod kernels;
pub mod montecarlo;
pub mod potential;
pub mod quad;
pub mod report;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
