//! Numerical laboratory for Hilbert-type operators induced by radial weights.

// `!(x > 0.0)` style guards are used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod conditions;
pub mod error;
pub mod families;
pub mod harness;
pub mod norms;
pub mod operator;
pub mod quadrature;
pub mod report;
pub mod weights;

pub use error::{Error, Result};
pub use weights::{MomentTable, RadialWeight, WeightSpec};
