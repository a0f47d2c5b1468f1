//! Numerical core for the non-isothermal viscous Cahn–Hilliard system with
//! an inertial term, Maxwell–Cattaneo heat flux and dynamic boundary
//! conditions, posed on the x-periodic slab `[0, Lx) × [0, Ly]`.
//!
//! The crate is `#![no_std]` and only needs `alloc`. File formats, the
//! command line and scenario construction live in the `chdyn` crate.
//!
//! Module map:
//!
//! * [`grid`]: slab geometry, field storage, quadrature and norms.
//! * [`operators`]: finite-difference operators and the zero-mean Neumann
//!   inverse `A₀⁻¹`.
//! * [`model`]: polynomial nonlinearities `f`, `g`, their potentials and
//!   structural checks.
//! * [`integrator`]: the semi-implicit time stepper.
//! * [`diagnostics`]: conserved totals, energy and Lyapunov functionals.
//! * [`steady`]: the stationary problem, `Υ`, its gradient and decay fits.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

mod banded;
pub mod diagnostics;
mod error;
mod fft;
mod spectral;
pub mod grid;
pub mod integrator;
pub mod model;
pub mod operators;
pub mod steady;

pub use banded::BandedLu;
pub use error::{Error, Result};
pub use grid::{BoundaryField, FluxField, GridSpec, InteriorField};
pub use integrator::{StepperConfig, Stepper, SystemState};
pub use model::{ModelParams, Polynomial};
