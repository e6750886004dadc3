// Negated comparisons are deliberate: NaN must fail a check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod crossnorm;
pub mod decomp;
pub mod error;
pub mod feasibility;
pub mod lhv;
pub mod linalg;
pub mod nnls;
pub mod schmidt;
pub mod theorem3;
pub mod tolerance;

pub use error::{Error, Result};
pub use tolerance::Tolerances;
