//! Desk-scale simulation of a magnetically trapped BEC coupled to a
//! superconducting flux loop on an atom chip.
//!
//! The crate is organised bottom-up:
//!
//! * [`magnetostatics`]: Biot–Savart fields of Z-wire segments, circular
//!   loops and uniform biases, evaluated at points or on grids.
//! * [`fluxloop`]: the loop as a flux-quantised circuit and as a two-level
//!   system.
//! * [`trap`]: trap minimum, frequencies, axial perturbation profiles,
//!   distance sweeps and the axial model fit.
//! * [`dynamics`]: 1D split-step propagation, ground states, chemical
//!   potentials, branch evolution and the relative phase.
//! * [`entanglement`]: the loop⊗BEC composite state, time-of-flight densities,
//!   CNOT disentangling and which-path measures.
//!
//! Everything is SI internally. [`units`] holds the conversions used at the
//! I/O boundary (µm, ms, G, mG).
//!
//! Data-parallel loops (grid nodes, sweep points, branch pairs) go through
//! [`exec`]; with the `parallel` feature disabled they run sequentially.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod dynamics;
pub mod entanglement;
mod error;
pub mod exec;
pub mod fluxloop;
pub mod magnetostatics;
pub mod trap;
pub mod units;
mod vec3;

pub use error::{Error, Result};
pub use exec::Execution;
pub use vec3::Vec3;
