//! The loop⊗BEC composite state `c0|0⟩|N,φ0⟩ + c1 e^{iΦ}|1⟩|N,φ1⟩`, its
//! time-of-flight densities, CNOT disentangling and which-path measures.
//!
//! `|N,φ⟩` is the N-fold product of one orbital, so every N-atom overlap is
//! the single-orbital overlap raised to N.
//!
//! Note on naming: `|S⟩` is sometimes used both for the loop superposition
//! and for the symmetric BEC state after disentangling. Here the former is
//! [`CompositeState::symmetric`] and the latter is the output of
//! [`apply_cnot`].

mod measures;
mod state;
mod tof;

pub use measures::{
    distinguishability_check, entanglement_report, fringe_spacing, noon_fringe_spacing,
    noon_phase_budget, sample_outcomes, Distinguishability, EntanglementReport, OutcomeSample,
};
pub use state::{
    apply_cnot, branch_overlap, entanglement_entropy, which_path_contrast, CompositeState,
};
pub use tof::{
    density_shift, free_expand, measured_fringe_period, tof_density, Conditioning, TofDensity,
    MAX_EXPANSION_NODES, MIN_OUTCOME_PROBABILITY,
};
