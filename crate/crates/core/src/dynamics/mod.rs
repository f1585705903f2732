//! One-dimensional axial dynamics: ground states, split-step propagation,
//! chemical potentials, branch evolution under the ramped perturbation and
//! the relative phase between branches.

mod branch;
mod grid;
mod interaction;
mod ramp;
mod split_step;
mod wavefunction;

pub use branch::{
    branch_evolution, evolve_branches, phase_from_samples, relative_phase, timeseries_csv,
    AxialPotential, BranchResult, EvolutionOptions, PhaseSeries, FIDELITY_FLOOR,
};
pub use grid::{Grid1D, MIN_NODES};
pub use interaction::{g1d, g3d, thomas_fermi_mu, ThomasFermi};
pub use ramp::{
    adiabatic_criterion, fit_a_si, fit_omega, AdiabaticReport, RampSchedule, RampShape,
    ADIABATIC_THRESHOLD,
};
pub use split_step::{
    chemical_potential, energy_terms, free_propagate, ground_state, ground_state_from, propagate,
    EnergyTerms, FromFn, GroundStateOptions, GroundStateReport, PotentialPath, Propagator, Static,
    STABILITY_LIMIT,
};
pub use wavefunction::{Wavefunction1D, BOUNDARY_TOLERANCE, NORM_TOLERANCE};
