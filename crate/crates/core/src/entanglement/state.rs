use num_complex::Complex64;

use crate::dynamics::Wavefunction1D;
use crate::{Error, Result};

/// Tolerance on `|c0|² + |c1|² = 1`.
const AMPLITUDE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CompositeState {
    pub c0: Complex64,
    pub c1: Complex64,
    pub phi0: Wavefunction1D,
    pub phi1: Wavefunction1D,
    pub atom_number: u64,
    /// Relative phase Φ, rad.
    pub phi: f64,
    /// Common phase of both branches, rad. Informational only.
    pub global_phase: f64,
    /// Set by [`apply_cnot`]: the loop is in |0⟩ and the BEC carries
    /// `c0|N,φ0⟩ + c1 e^{iΦ}|N,φ1⟩` (renormalised).
    pub disentangled: bool,
}

impl CompositeState {
    pub fn new(
        c0: Complex64,
        c1: Complex64,
        phi0: Wavefunction1D,
        phi1: Wavefunction1D,
        phi: f64,
    ) -> Result<Self> {
        let atom_number = phi0.atom_number;
        let s = CompositeState {
            c0,
            c1,
            phi0,
            phi1,
            atom_number,
            phi,
            global_phase: 0.0,
            disentangled: false,
        };
        s.validate()?;
        Ok(s)
    }

    /// Equal loop amplitudes `1/√2`.
    pub fn symmetric(phi0: Wavefunction1D, phi1: Wavefunction1D, phi: f64) -> Result<Self> {
        let c = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        CompositeState::new(c, c, phi0, phi1, phi)
    }

    pub fn validate(&self) -> Result<()> {
        let norm = self.c0.norm_sqr() + self.c1.norm_sqr();
        if (norm - 1.0).abs() > AMPLITUDE_TOLERANCE {
            return Err(Error::InvalidInput(format!("|c0|^2 + |c1|^2 = {norm}")));
        }
        if self.phi0.grid != self.phi1.grid {
            return Err(Error::InvalidInput("branches on different grids".into()));
        }
        if self.atom_number == 0 {
            return Err(Error::InvalidInput("atom number must be >= 1".into()));
        }
        if !self.phi.is_finite() {
            return Err(Error::InvalidInput("non-finite relative phase".into()));
        }
        Ok(())
    }

    /// `c0* c1 e^{iΦ}`, the coefficient of every branch cross term.
    pub(crate) fn coherence(&self) -> Complex64 {
        self.c0.conj() * self.c1 * Complex64::from_polar(1.0, self.phi)
    }
}

/// Single-orbital overlap `⟨φ0|φ1⟩`.
pub fn branch_overlap(state: &CompositeState) -> Result<Complex64> {
    state.phi0.inner(&state.phi1)
}

/// N-atom which-path contrast `|⟨φ0|φ1⟩|^N`.
pub fn which_path_contrast(state: &CompositeState) -> Result<f64> {
    Ok(branch_overlap(state)?.norm().powf(state.atom_number as f64))
}

/// Von Neumann entropy of the loop's reduced density matrix, bits.
pub fn entanglement_entropy(state: &CompositeState) -> Result<f64> {
    if state.disentangled {
        return Ok(0.0);
    }
    let p0 = state.c0.norm_sqr();
    let p1 = state.c1.norm_sqr();
    let off = state.c0.norm() * state.c1.norm() * which_path_contrast(state)?;
    let r = ((p0 - p1).powi(2) + 4.0 * off * off).sqrt().min(1.0);
    let h = |l: f64| if l > 0.0 { -l * l.log2() } else { 0.0 };
    Ok(h(0.5 * (1.0 + r)) + h(0.5 * (1.0 - r)))
}

/// Controlled-NOT with the BEC as control: `|N,φ1⟩|1⟩ → |N,φ1⟩|0⟩`. The
/// loop factor becomes |0⟩; applying it again changes nothing.
pub fn apply_cnot(state: &CompositeState) -> CompositeState {
    CompositeState {
        disentangled: true,
        ..state.clone()
    }
}
