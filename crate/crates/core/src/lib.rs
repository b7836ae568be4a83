//! Newton's minimal resistance problem on convex bodies over the unit disc.

// `!(x > 0.0)` style tests are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod criterion;
pub mod error;
pub mod geometry;
pub mod parallel;
pub mod perturbation;
pub mod quadrature;
pub mod resistance;
pub mod solvers;

pub use error::{ResistError, Result};
pub use resistance::{resistance, Delta, ResistanceBreakdown};
