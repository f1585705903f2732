use serde::{Deserialize, Serialize};

use crate::constants::HBAR;
use crate::trap::AtomSpecies;
use crate::units::tesla_to_mg;
use crate::{Error, Result};

/// Contact coupling `4πħ²a_s/m`, J·m³.
pub fn g3d(species: &AtomSpecies) -> f64 {
    4.0 * std::f64::consts::PI * HBAR * HBAR * species.scattering_length / species.mass
}

/// Axial coupling after integrating out the radial ground state,
/// `g3d / (2π l_x l_z)` with `l_i = sqrt(ħ/mω_i)`, J·m.
pub fn g1d(species: &AtomSpecies, omega_x: f64, omega_z: f64) -> Result<f64> {
    species.validate()?;
    if !(omega_x > 0.0 && omega_z > 0.0) {
        return Err(Error::InvalidInput("radial frequencies must be > 0".into()));
    }
    let lx = (HBAR / (species.mass * omega_x)).sqrt();
    let lz = (HBAR / (species.mass * omega_z)).sqrt();
    Ok(g3d(species) / (std::f64::consts::TAU * lx * lz))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThomasFermi {
    /// J
    pub mu: f64,
    /// Field equivalent `μ/(m_F g_F μ_B)`, mG.
    pub mu_mg: f64,
    /// Set when the scattering length is zero and the formula gives 0.
    pub degenerate: bool,
}

/// `μ = (ħω̄/2)(15 N a_s / a_ho)^{2/5}` with ω̄ the geometric mean frequency
/// and `a_ho = sqrt(ħ/mω̄)`. Frequencies in rad/s.
pub fn thomas_fermi_mu(
    species: &AtomSpecies,
    omegas: [f64; 3],
    atom_number: u64,
) -> Result<ThomasFermi> {
    species.validate()?;
    if atom_number == 0 {
        return Err(Error::InvalidInput("atom number must be >= 1".into()));
    }
    if omegas.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
        return Err(Error::InvalidInput("trap frequencies must be > 0".into()));
    }
    let wbar = (omegas[0] * omegas[1] * omegas[2]).cbrt();
    let a_ho = (HBAR / (species.mass * wbar)).sqrt();
    let x = 15.0 * atom_number as f64 * species.scattering_length / a_ho;
    let mu = 0.5 * HBAR * wbar * x.powf(0.4);
    Ok(ThomasFermi {
        mu,
        mu_mg: tesla_to_mg(species.field_of_energy(mu)),
        degenerate: species.scattering_length == 0.0,
    })
}
