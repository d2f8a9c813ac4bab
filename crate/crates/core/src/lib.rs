//! Spill-free feedback stabilization of a liquid-carrying tank.
//!
//! The liquid obeys the one-dimensional viscous Saint-Venant equations in
//! the tank frame; the tank is a double integrator driven by a momentum
//! feedback law. The crate provides the discrete state, the Lyapunov
//! functionals and their bound functions, friction models, gain
//! certification, a conservative method-of-lines solver and a
//! verification harness.

// `!(x > 0.0)` comparisons deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod controller;
pub mod error;
pub mod friction;
pub mod functionals;
pub mod harness;
pub mod solver;
pub mod state;

pub use error::{Error, Result};
