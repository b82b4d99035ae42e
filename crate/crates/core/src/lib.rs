//! Nonlinear nonlocal diffusion `∂ₜu + 𝓛ᵤu = 0` on a periodic lattice.
//!
//! The operator is
//!
//! ```text
//! (𝓛_v u)(x) = ∫ [u(x) − u(y)] m(v(x), v(y); |x − y|) dy
//! ```
//!
//! for a homogeneous jump kernel `m`. Kernels are regularized (a ramp in
//! `|a − b|` and a spatial cutoff at radius `ε`) before they are handed to
//! the solver, which makes the discrete operator bounded and Lipschitz in the
//! field. Everything the continuous theory promises (mass conservation,
//! `Lᵖ`/BV decay, `L¹` contraction, comparison, positivity) is exposed as a
//! discrete, checkable quantity in [`diagnostics`].
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! disabled. The `parallel` feature evaluates operator rows with rayon; row
//! sums are always accumulated in a fixed order, so results do not depend on
//! the worker count.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod diagnostics;
pub mod error;
pub mod evolve;
pub mod kernels;
pub mod lattice;
pub mod math;
pub mod operator;
pub mod quadrature;
pub mod validator;

pub use diagnostics::{DiagnosticsRecord, Quantity};
pub use error::{Error, Result};
pub use evolve::{Integrator, SolverConfig, TimeStep, Trajectory};
pub use kernels::{
    regularize, smooth_ramp, JumpKernel, Kernel, LevyDensity, RegularizedKernel, ScalarFunction,
};
pub use lattice::{Field, Grid, Profile};
pub use operator::OperatorContext;
