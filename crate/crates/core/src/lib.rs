//! Landau-Zener tunneling in a two-level system whose coupling depends on
//! the amplitude of one mode, `α + β|a|²`.
//!
//! * [`model`]: parameters, states, Hamiltonian, Bloch variables.
//! * [`spectrum`]: self-consistent adiabatic levels and their topology.
//! * [`dynamics`]: time-dependent sweeps and tunneling probabilities.
//! * [`phasespace`]: classical reduction, fixed points, phase boundaries.
//! * [`experiments`]: dataset generation with run manifests.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod model;
pub mod ode;
pub mod phasespace;
pub mod poly;
pub mod spectrum;

pub use error::{DynamicsError, ExperimentError, ModelError, PhaseSpaceError, SpectrumError};
pub use model::{BlochCoords, ModelParams, QuantumState};
