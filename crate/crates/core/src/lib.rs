//! Shortcuts to adiabatic passage by counterdiabatic driving for two- and
//! three-level atoms.
//!
//! Units: Hamiltonians are angular frequencies with ħ divided out. The
//! experiment presets use rad/μs and μs; the dimensionless Allen-Eberly
//! helpers set β = 1.

pub mod adiabatic;
pub mod counterdiabatic;
pub mod error;
pub mod experiments;
pub mod quantum;
pub mod schemes;

pub use error::{Error, Result};
pub use quantum::{evolve, eigensystem_hermitian, Method, OperatorMatrix, StateVector, TimeGrid, Trajectory};
