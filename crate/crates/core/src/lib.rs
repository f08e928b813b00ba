//! phaselab-core: a finite-dimensional quantum-evolution laboratory.
//!
//! The crate propagates d-level states under time-dependent Hermitian
//! generators, extracts total/dynamical/geometric phases by independent
//! discrete routes, and runs the gauge, frame and superposition experiments
//! that cross-validate them against closed-form two-level oracles.
//!
//! Everything is hbar = 1, phases in radians, principal branch (-pi, pi].

// `!(a > b)` guards are NaN-rejecting on purpose; `a <= b` is not equivalent.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gauge;
pub mod hamiltonian;
pub mod linalg;
pub mod phase;
pub mod propagator;
pub mod scenario;
pub mod state;
pub mod superpose;
pub mod verify;
pub mod wframe;

pub use error::{Error, Result};
pub use state::{
    arg_overlap, bloch_vector, inner_product, wrap_angle, ComplexState, FrameTrajectory,
    TimeGrid, Trajectory,
};
