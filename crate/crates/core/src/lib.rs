//! Variational computation of travelling-wave fronts for gradient reaction-diffusion
//! systems with unbalanced, possibly degenerate, double-well potentials.
//!
//! The pipeline minimizes an exponentially weighted energy over a pinned window,
//! bisects the speed on the sign of its constrained minimum, and validates the
//! result against ODE shooting and a parabolic time-stepper.

// `!(x > 0.0)` is the NaN-rejecting form used throughout for parameter checks.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod auditor;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod minimizer;
pub mod oracles;
pub mod potential;
pub mod run;
pub mod speed;

pub use error::{Error, Result};
