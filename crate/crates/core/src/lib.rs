//! Numerical laboratory for gelation in the Smoluchowski coagulation equation.
//!
//! Three independent solvers (integer-mass deterministic [`grid`], dyadic ODE
//! [`cascade`], stochastic particle [`mlsim`]) are cross-checked against the
//! explicit gel-time and moment bounds in [`bounds`]. The [`harness`] module
//! ties them together: weak-form residuals, criticality scans, config files
//! and CSV output.

pub mod bounds;
pub mod cascade;
pub mod error;
pub mod grid;
pub mod harness;
pub mod kernels;
pub mod mlsim;
pub mod ode;
pub mod quadrature;
pub mod refinement;
pub mod spectrum;

pub use error::{Error, Result};
pub use kernels::Kernel;
pub use spectrum::{MassSpectrum, MomentRow, Trajectory};
