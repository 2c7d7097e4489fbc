//! Invariant-region-preserving finite-volume and discontinuous Galerkin
//! solvers for 2×2 conservation laws in one space dimension.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod discretization;
pub mod error;
pub mod exact;
pub mod fluxes;
pub mod harness;
pub mod limiter;
pub mod model;
pub mod schemes;

pub use error::{Error, Result};
pub use model::{InvariantRegion, PressureLaw, State, SystemKind};
