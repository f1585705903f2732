//! The superconducting loop as a flux-quantised circuit and as a two-level
//! system `H = E0·I + J·σx` on the basis {|0⟩ clockwise, |1⟩ anticlockwise}.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{FLUX_QUANTUM, HBAR, MU0};
use crate::magnetostatics::CircularLoop;
use crate::{Error, Result};

/// Persistent-current branch of the loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// |0⟩: current circulating clockwise seen from +normal (negative current).
    Clockwise,
    /// |1⟩: anticlockwise (positive current).
    Anticlockwise,
}

impl Branch {
    /// Sign applied to the magnitude of the persistent current.
    pub fn current_sign(self) -> f64 {
        match self {
            Branch::Clockwise => -1.0,
            Branch::Anticlockwise => 1.0,
        }
    }

    /// Sign of the odd perturbation term in the axial model for this branch.
    pub fn perturbation_sign(self) -> f64 {
        match self {
            Branch::Clockwise => 1.0,
            Branch::Anticlockwise => -1.0,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Branch::Clockwise => 0,
            Branch::Anticlockwise => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Branch::Clockwise => "clockwise",
            Branch::Anticlockwise => "anticlockwise",
        }
    }
}

/// Thin-ring self-inductance `μ0 R (ln(8R/a) − 2)`.
pub fn self_inductance(geometry: &CircularLoop, wire_radius: f64) -> Result<f64> {
    let r = geometry.radius();
    let max = 0.5 * r;
    if !(wire_radius > 0.0 && wire_radius < max) {
        return Err(Error::InvalidWireRadius { wire_radius, max });
    }
    let l = MU0 * r * ((8.0 * r / wire_radius).ln() - 2.0);
    if l <= 0.0 {
        return Err(Error::InvalidWireRadius { wire_radius, max });
    }
    Ok(l)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopCircuit {
    geometry: CircularLoop,
    wire_radius: f64,
    self_inductance: f64,
    /// Externally applied flux, Wb.
    pub flux_bias: f64,
}

impl LoopCircuit {
    pub fn new(geometry: CircularLoop, wire_radius: f64) -> Result<Self> {
        let self_inductance = self_inductance(&geometry, wire_radius)?;
        Ok(LoopCircuit {
            geometry,
            wire_radius,
            self_inductance,
            flux_bias: 0.0,
        })
    }

    pub fn geometry(&self) -> &CircularLoop {
        &self.geometry
    }

    pub fn wire_radius(&self) -> f64 {
        self.wire_radius
    }

    pub fn inductance(&self) -> f64 {
        self.self_inductance
    }

    /// Current whose self-flux is `flux_fraction` flux quanta.
    pub fn persistent_current(&self, flux_fraction: f64) -> f64 {
        persistent_current_for_flux(self.self_inductance, flux_fraction)
    }

    /// The loop carrying the persistent current of `branch` for `|flux_fraction|`.
    pub fn branch_loop(&self, flux_fraction: f64, branch: Branch) -> CircularLoop {
        let i = branch.current_sign() * self.persistent_current(flux_fraction).abs();
        self.geometry.with_current(i)
    }
}

/// `I = f·Φ0 / L`.
pub fn persistent_current_for_flux(inductance: f64, flux_fraction: f64) -> f64 {
    flux_fraction * FLUX_QUANTUM / inductance
}

/// Uniform field along the loop normal threading half a flux quantum.
pub fn bias_field_for_half_quantum(geometry: &CircularLoop) -> f64 {
    0.5 * FLUX_QUANTUM / geometry.area()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelState {
    pub amp0: Complex64,
    pub amp1: Complex64,
}

impl TwoLevelState {
    /// Normalises the given amplitudes.
    pub fn new(amp0: Complex64, amp1: Complex64) -> Result<Self> {
        let n = (amp0.norm_sqr() + amp1.norm_sqr()).sqrt();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InvalidInput("two-level state has zero norm".into()));
        }
        Ok(TwoLevelState {
            amp0: amp0 / n,
            amp1: amp1 / n,
        })
    }

    pub fn zero() -> Self {
        TwoLevelState {
            amp0: Complex64::new(1.0, 0.0),
            amp1: Complex64::new(0.0, 0.0),
        }
    }

    /// (|0⟩ + |1⟩)/√2.
    pub fn plus() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        TwoLevelState {
            amp0: Complex64::new(s, 0.0),
            amp1: Complex64::new(s, 0.0),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp0.norm_sqr() + self.amp1.norm_sqr()
    }

    pub fn populations(&self) -> (f64, f64) {
        (self.amp0.norm_sqr(), self.amp1.norm_sqr())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelHamiltonian {
    /// Diagonal energy, J.
    pub e0: f64,
    /// Tunnelling amplitude, J.
    pub j_tunnel: f64,
}

/// Exact propagator `e^{−iE0t/ħ}(cos(Jt/ħ) − i sin(Jt/ħ) σx)`.
pub fn evolve_two_level(state: &TwoLevelState, h: &TwoLevelHamiltonian, t: f64) -> TwoLevelState {
    let theta = h.j_tunnel * t / HBAR;
    let global = Complex64::from_polar(1.0, -h.e0 * t / HBAR);
    let c = Complex64::new(theta.cos(), 0.0);
    let s = Complex64::new(0.0, -theta.sin());
    TwoLevelState {
        amp0: global * (c * state.amp0 + s * state.amp1),
        amp1: global * (s * state.amp0 + c * state.amp1),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementBasis {
    Computational,
    PlusMinus,
}

/// Born probabilities: (p0, p1) or (p+, p−).
pub fn measure_loop(state: &TwoLevelState, basis: MeasurementBasis) -> (f64, f64) {
    match basis {
        MeasurementBasis::Computational => state.populations(),
        MeasurementBasis::PlusMinus => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            let plus = (state.amp0 + state.amp1) * s;
            let minus = (state.amp0 - state.amp1) * s;
            (plus.norm_sqr(), minus.norm_sqr())
        }
    }
}
