// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bernstein;
pub mod error;
pub mod field;
pub mod kernels;
pub mod oracle;
pub mod pathkit;
pub mod quad;
pub mod rng;
pub mod semigroup;
pub mod special;
pub mod spin;
pub mod stats;
pub mod subordinator;

pub use error::{Error, Result};
