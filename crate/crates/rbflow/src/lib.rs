//! Numerical laboratory for the Ricci-Bourguignon family of geometric flows
//! dg/dt = -2 (Ric - rho R g).
//!
//! The crate covers, at desk scale, the computable side of the theory:
//!
//! * curvature tensor calculus on periodic charts ([`tensor`]),
//! * principal symbols of the linearized operator and the parabolicity
//!   classification in (n, rho), with the DeTurck correction ([`symbol`]),
//! * the fiberwise reaction ODEs of the curvature operator, preserved cones
//!   and the Hamilton-Ivey pinching set ([`fiber_ode`]),
//! * method-of-lines evolution of metrics with residual checks for every
//!   curvature evolution equation, plus exact model solutions ([`flow`]),
//! * discrete interpolation inequalities and smoothing-estimate monitors
//!   ([`estimates`]).
//!
//! Each capability has a runnable demo under `examples/`; the `rbflow`
//! binary exposes the same machinery as batch subcommands.

pub mod cli;
pub mod error;
pub mod estimates;
pub mod fiber_ode;
pub mod flow;
pub mod io;
pub mod parallel;
pub mod grid;
pub mod symbol;
pub mod tensor;

pub use error::{RbError, Result};
