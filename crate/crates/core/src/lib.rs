//! Local Gaussian work extraction: symplectic tools, Gaussian monotones,
//! free-state structure, distillation examples and truncated Fock channels.

// `!(x >= 0.0)` style checks are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod activity;
pub mod distillation;
pub mod error;
pub mod fock;
pub mod free;
pub mod gaussian;
pub mod sampling;
pub mod symplectic;
pub mod work;

pub use error::{Error, Result};
pub use gaussian::{GaussianState, StateKind};
pub use symplectic::{CovarianceMatrix, OrthogonalSymplectic, SymplecticMatrix};
