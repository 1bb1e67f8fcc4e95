//! Numerical core for sum-Hessian operators `S_k = σ_k + σ_{k-1}`.
//!
//! Everything here is `no_std` (with `alloc`): pure functions of their inputs,
//! deterministic given a seed, and free of IO. The `hessianlab` crate layers
//! file formats, the command-line front end, a sparse direct solver and
//! thread-level parallelism on top.
//!
//! Modules:
//!
//! * [`symfun`]: elementary symmetric functions, deleted functions, operator jets.
//! * [`cones`]: Gårding cone membership and convexity/ellipticity probes.
//! * [`inequality`]: randomized campaigns for the pointwise inequalities.
//! * [`transforms`]: quadratic-shift constants, the rigidity cubic, grid
//!   functions and the discrete Legendre transform.
//! * [`singular`]: the Pogorelov-type family `u^σ`.
//! * [`solver`]: damped-Newton finite differences for `σ₃ + ασ₂ = f`.
#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod cones;
pub mod error;
pub mod grid;
pub mod inequality;
pub mod linalg;
pub mod report;
pub mod sampling;
pub mod singular;
pub mod solver;
pub mod spectrum;
pub mod symfun;
pub mod transforms;

pub use error::{LabError, Result};
pub use report::{VerificationReport, Witness};
pub use spectrum::{Spectrum, SymmetricMatrix};
