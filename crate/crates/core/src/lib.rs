// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod data;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod sampler;
pub mod stats;

pub use error::{Error, ErrorKind, Result};
