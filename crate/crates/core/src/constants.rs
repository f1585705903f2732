//! Pinned physical constants (SI). Every module reads from here.

use std::f64::consts::PI;

/// Bumped whenever a value below changes; recorded in run manifests.
pub const CONSTANTS_VERSION: &str = "1";

/// Vacuum permeability, T·m/A.
pub const MU0: f64 = 4.0 * PI * 1e-7;
pub const MU0_OVER_4PI: f64 = 1e-7;
/// Superconducting flux quantum h/2e, Wb.
pub const FLUX_QUANTUM: f64 = 2.067833848e-15;
/// Bohr magneton, J/T.
pub const BOHR_MAGNETON: f64 = 9.2740100783e-24;
/// Mass of ⁸⁷Rb, kg.
pub const RB87_MASS: f64 = 1.44316060e-25;
/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054571817e-34;
/// s-wave scattering length of ⁸⁷Rb, m.
pub const RB87_SCATTERING_LENGTH: f64 = 5.31e-9;

/// Filament exclusion radius for field evaluation, m.
pub const GEOMETRY_EPSILON: f64 = 1e-6;
/// Largest current accepted on a single straight segment, A.
pub const SEGMENT_CURRENT_GUARD: f64 = 100.0;

/// Name/value pairs for reports.
pub fn table() -> [(&'static str, f64); 7] {
    [
        ("mu0", MU0),
        ("flux_quantum", FLUX_QUANTUM),
        ("bohr_magneton", BOHR_MAGNETON),
        ("rb87_mass", RB87_MASS),
        ("hbar", HBAR),
        ("rb87_scattering_length", RB87_SCATTERING_LENGTH),
        ("geometry_epsilon", GEOMETRY_EPSILON),
    ]
}
