//! Mean-field simulator for the n-phase driven-dissipative Dicke model
//! realized with n groups of trapped atoms pumped with phases `2πj/n`
//! inside a single-mode cavity.
//!
//! The crate is organized bottom-up:
//!
//! - [`params`]: physical parameters and their dimensionless reduction
//! - [`state`], [`model`]: state vectors, drift, forces, energy, symmetry
//! - [`integrate`], [`dynamics`]: time integration, ensembles, clustering
//! - [`stationary`]: roots of the force equations, Jacobians, stability
//! - [`linear`]: closed-form normal modes and the effective phonon hopping
//! - [`phase`]: parameter sweeps, line cuts and force contours

pub mod contour;
pub mod dynamics;
pub mod error;
pub mod integrate;
pub mod linalg;
pub mod linear;
pub mod model;
pub mod params;
pub mod phase;
pub mod state;
pub mod stationary;

pub use error::{Error, Result};
pub use params::{reduce, PhysicalParams, ReducedParams};
pub use state::{symmetry_transform, FullState, MechState, SymmetryElement};
