//! Solver suite for a 1D reduction of the axisymmetric Navier-Stokes
//! equations with swirl.
//!
//! The hierarchy runs from an exactly solvable ODE through a
//! reaction-diffusion system and 1D convection models (Eulerian and
//! Lagrangian) up to a verifier that lifts 1D solutions to exact 3D
//! axisymmetric fields and checks the governing equations residually.
//! A diagnostics layer asserts the analytic invariants (maximum principle,
//! sup bounds, energy budgets, conservation laws) along every run.

pub mod error;
pub mod grid;
pub mod spectral;

pub mod ode;

pub mod diagnostics;
pub mod initial;
pub mod model1d;

pub mod lagrangian;
pub mod lift3d;

pub use error::{BlowupCause, ModelError};
pub use grid::{PeriodicGrid, ScalarField};
