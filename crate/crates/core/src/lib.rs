// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
mod error;
pub mod experiments;
pub mod fit;
pub mod hamiltonian;
pub mod io;
pub mod noise;
pub mod propagator;
pub mod sequence;
pub mod units;

pub use error::{Error, Result};
