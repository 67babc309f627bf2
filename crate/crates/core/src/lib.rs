//! Simulation and verification toolkit for the modified SQG (α-patch)
//! active scalar in the plane.
//!
//! The temperature `θ` is transported by the velocity `u = K * θ` with the
//! kernel `K(z) = α c(α) z⊥/|z|^{2+α}`. Two discretizations are provided:
//! regularized particles and uniform patches evolved by contour dynamics.
//! [`diagnostics`] computes conserved quantities and generalized moments;
//! [`bounds`] fits the constants of the confinement estimates and reports
//! whether the simulated data respect them.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod geometry;
pub mod io;
pub mod kernel;
pub mod quadrature;
pub mod vec2;

pub use config::{InitialCondition, Representation, SimConfig};
pub use diagnostics::DiagnosticsRecord;
pub use dynamics::{evolve, step_rk4, Snapshot, Trajectory};
pub use error::{Error, Result};
pub use field::{ContourPatch, Field, ParticleField};
pub use kernel::KernelParams;
pub use vec2::Vec2;
