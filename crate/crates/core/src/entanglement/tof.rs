use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::state::{branch_overlap, CompositeState};
use crate::dynamics::{free_propagate, Grid1D, Wavefunction1D};
use crate::trap::AtomSpecies;
use crate::units::{m_to_um, sig9};
use crate::{Error, Result};

/// Post-selection below this probability is refused.
pub const MIN_OUTCOME_PROBABILITY: f64 = 1e-15;
/// Largest grid the expansion window may grow to.
pub const MAX_EXPANSION_NODES: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conditioning {
    /// Loop not measured.
    None,
    /// Loop found in |0⟩.
    Loop0,
    /// Loop found in |1⟩.
    Loop1,
    /// Loop found in `(|0⟩ + |1⟩)/√2`.
    Plus,
    /// Loop found in `(|0⟩ − |1⟩)/√2`.
    Minus,
}

impl Conditioning {
    pub const ALL: [Conditioning; 5] = [
        Conditioning::None,
        Conditioning::Loop0,
        Conditioning::Loop1,
        Conditioning::Plus,
        Conditioning::Minus,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Conditioning::None => "none",
            Conditioning::Loop0 => "loop0",
            Conditioning::Loop1 => "loop1",
            Conditioning::Plus => "plus",
            Conditioning::Minus => "minus",
        }
    }
}

impl std::str::FromStr for Conditioning {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Conditioning::ALL
            .into_iter()
            .find(|c| c.label() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown conditioning '{s}'")))
    }
}

/// Atomic density after release. Post-selected densities are renormalised
/// to N atoms; `probability` is the chance of the selected outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct TofDensity {
    pub grid: Grid1D,
    /// atoms/m
    pub density: Vec<f64>,
    /// s
    pub expansion_time: f64,
    pub conditioning: Conditioning,
    pub probability: f64,
}

impl TofDensity {
    /// `∫ n dy`.
    pub fn atoms(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.grid.spacing()
    }

    pub fn mean_position(&self) -> f64 {
        let dy = self.grid.spacing();
        self.density
            .iter()
            .enumerate()
            .map(|(j, n)| n * self.grid.position(j))
            .sum::<f64>()
            * dy
            / self.atoms()
    }

    /// CSV `y_um,density_per_um,conditioning,p_outcome` with header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("y_um,density_per_um,conditioning,p_outcome\n");
        self.append_csv_rows(&mut out);
        out
    }

    pub fn append_csv_rows(&self, out: &mut String) {
        let label = self.conditioning.label();
        let p = sig9(self.probability);
        for (j, n) in self.density.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{label},{p}",
                sig9(m_to_um(self.grid.position(j))),
                sig9(n * 1e-6)
            );
        }
    }
}

/// Release both branches and let them fly freely for `t`. The window grows
/// by powers of two (same spacing) until neither branch touches its edges.
pub fn free_expand(
    state: &CompositeState,
    species: &AtomSpecies,
    t: f64,
) -> Result<CompositeState> {
    state.validate()?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "expansion time {t} must be >= 0"
        )));
    }
    let base = state.phi0.grid;
    let mut factor = 1;
    loop {
        let grid = base.enlarged(factor)?;
        let a = free_propagate(&state.phi0.embedded(grid)?, species, t)?;
        let b = free_propagate(&state.phi1.embedded(grid)?, species, t)?;
        let worst = a.boundary_mass().max(b.boundary_mass());
        if a.check_boundary().is_ok() && b.check_boundary().is_ok() {
            return Ok(CompositeState {
                phi0: a,
                phi1: b,
                ..state.clone()
            });
        }
        if 2 * grid.len() > MAX_EXPANSION_NODES {
            return Err(Error::WindowTooSmall {
                boundary_mass: worst,
            });
        }
        factor *= 2;
    }
}

/// Density of N atoms for the given loop measurement.
///
/// Unmeasured: `N(|c0|²|φ0|² + |c1|²|φ1|²)`, with no cross term. Any cross
/// term `2Re(c0* c1 e^{iΦ} φ0* φ1 ⟨φ0|φ1⟩^{N−1})` is weighted by the overlap
/// of the N−1 spectator atoms, so for a single atom it is the full
/// two-path interference and for distinguishable branches it vanishes.
pub fn tof_density(
    state: &CompositeState,
    conditioning: Conditioning,
    expansion_time: f64,
) -> Result<TofDensity> {
    state.validate()?;
    let n_atoms = state.atom_number as f64;
    let d0 = state.phi0.density();
    let d1 = state.phi1.density();
    let p0 = state.c0.norm_sqr();
    let p1 = state.c1.norm_sqr();
    let overlap = branch_overlap(state)?;
    let spectators = if state.atom_number == 1 {
        1.0.into()
    } else {
        overlap.powf(n_atoms - 1.0)
    };
    let coherence = state.coherence();
    let full = coherence * overlap * spectators;
    let cross: Vec<f64> = state
        .phi0
        .amplitudes
        .iter()
        .zip(&state.phi1.amplitudes)
        .map(|(a, b)| 2.0 * (coherence * a.conj() * b * spectators).re)
        .collect();
    let mix = |w0: f64, w1: f64, wc: f64| -> Vec<f64> {
        (0..d0.len())
            .map(|j| n_atoms * (w0 * d0[j] + w1 * d1[j] + wc * cross[j]).max(0.0))
            .collect()
    };

    let (density, probability) = if state.disentangled {
        // loop sits in |0⟩; the BEC carries the branch superposition
        let z = p0 + p1 + 2.0 * full.re;
        let p_sel = match conditioning {
            Conditioning::None | Conditioning::Loop0 => 1.0,
            Conditioning::Loop1 => 0.0,
            Conditioning::Plus | Conditioning::Minus => 0.5,
        };
        if p_sel < MIN_OUTCOME_PROBABILITY || z < MIN_OUTCOME_PROBABILITY {
            return Err(Error::ZeroProbabilityBranch {
                probability: p_sel.min(z),
            });
        }
        (mix(p0 / z, p1 / z, 1.0 / z), p_sel)
    } else {
        match conditioning {
            Conditioning::None => (mix(p0, p1, 0.0), 1.0),
            Conditioning::Loop0 => post_select(p0, || mix(1.0, 0.0, 0.0))?,
            Conditioning::Loop1 => post_select(p1, || mix(0.0, 1.0, 0.0))?,
            Conditioning::Plus | Conditioning::Minus => {
                let sign = if conditioning == Conditioning::Plus {
                    1.0
                } else {
                    -1.0
                };
                let p = 0.5 * (p0 + p1 + sign * 2.0 * full.re);
                post_select(p, || {
                    let w = 0.5 / p;
                    mix(w * p0, w * p1, w * sign)
                })?
            }
        }
    };
    Ok(TofDensity {
        grid: state.phi0.grid,
        density,
        expansion_time,
        conditioning,
        probability,
    })
}

fn post_select(p: f64, density: impl FnOnce() -> Vec<f64>) -> Result<(Vec<f64>, f64)> {
    if p < MIN_OUTCOME_PROBABILITY {
        return Err(Error::ZeroProbabilityBranch { probability: p });
    }
    Ok((density(), p))
}

/// First-moment shift of a conditioned density relative to `N|φ0|²`, m.
pub fn density_shift(conditioned: &TofDensity, phi0: &Wavefunction1D) -> f64 {
    conditioned.mean_position() - phi0.mean_position()
}

/// Fringe period from the interference term `conditioned − unconditional`:
/// twice the mean spacing of its sign changes inside the envelope (where the
/// unconditional density exceeds `envelope_fraction` of its maximum). The
/// envelope is positive, so the zeros sit exactly where the cosine vanishes.
/// `None` with fewer than two crossings.
pub fn measured_fringe_period(
    grid: &Grid1D,
    conditioned: &[f64],
    unconditional: &[f64],
    envelope_fraction: f64,
) -> Option<f64> {
    let max = unconditional.iter().cloned().fold(0.0, f64::max);
    let cut = envelope_fraction * max;
    let h = grid.spacing();
    let mut zeros = Vec::new();
    for j in 0..conditioned.len().min(unconditional.len()).saturating_sub(1) {
        if unconditional[j] <= cut || unconditional[j + 1] <= cut {
            continue;
        }
        let a = conditioned[j] - unconditional[j];
        let b = conditioned[j + 1] - unconditional[j + 1];
        if a != 0.0 && a.signum() != b.signum() {
            zeros.push(grid.position(j) + h * a / (a - b));
        }
    }
    if zeros.len() < 2 {
        return None;
    }
    Some(2.0 * (zeros[zeros.len() - 1] - zeros[0]) / (zeros.len() - 1) as f64)
}
