//! Numerical laboratory for the time-fractional Burgers equation with a
//! left Caputo derivative in time.
//!
//! The crate solves the scalar fractional Cauchy problem that drives the
//! separable blow-up solution u(x, t) = -x v(t), brackets its blow-up time
//! numerically, and evaluates closed-form upper and lower bounds on that time
//! so the two can be checked against each other. A conservative solver for
//! the Burgers and job-market density forms of the PDE is included.

pub mod bounds;
pub mod error;
pub mod fode;
pub mod frac_ops;
pub mod impulse;
pub mod pde;
pub mod specfun;
pub mod sum;

pub use error::{Error, Result};
pub use frac_ops::{FractionalOrder, SampledFunction, TimeGrid};
