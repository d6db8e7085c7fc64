//! Nonlocal nonconvex energies, weighted norms, dyadic annulus tools and an
//! inequality harness for improved Hardy and Caffarelli–Kohn–Nirenberg
//! inequalities.

// `!(x > y)` is used on purpose so NaN lands in the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dyadic;
pub mod energy;
pub mod error;
pub mod fnlib;
pub mod quad;
pub mod special;
pub mod verify;

pub use error::{Error, Result};
pub use quad::{EnergyEstimate, QuadConfig};
