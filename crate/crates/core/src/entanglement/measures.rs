use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::state::{branch_overlap, entanglement_entropy, which_path_contrast, CompositeState};
use super::tof::{tof_density, Conditioning};
use crate::constants::HBAR;
use crate::dynamics::thomas_fermi_mu;
use crate::exec::{self, Execution};
use crate::fluxloop::MeasurementBasis;
use crate::trap::{AtomSpecies, AxialFitParams};
use crate::{Error, Result};

/// Fringe spacing of two Gaussians of width σ0 released from ±d/2:
/// `Λ = 2πħ(t² + (mσ0²/ħ)²)/(t m d)`, m.
pub fn fringe_spacing(sigma0: f64, d: f64, species: &AtomSpecies, t: f64) -> Result<f64> {
    species.validate()?;
    if !(t > 0.0 && d > 0.0 && sigma0 > 0.0) {
        return Err(Error::InvalidInput(
            "fringe spacing needs t, d, sigma0 > 0".into(),
        ));
    }
    let m = species.mass;
    let tau = m * sigma0 * sigma0 / HBAR;
    Ok(std::f64::consts::TAU * HBAR * (t * t + tau * tau) / (t * m * d))
}

/// NOON-state fringe spacing `Λ/N`. Seeing it requires Φ to stay put to
/// within [`noon_phase_budget`] from shot to shot.
pub fn noon_fringe_spacing(lambda: f64, atom_number: u64) -> Result<f64> {
    if atom_number == 0 {
        return Err(Error::InvalidInput("atom number must be >= 1".into()));
    }
    Ok(lambda / atom_number as f64)
}

/// Allowed shot-to-shot drift of Φ for an N-atom NOON pattern, `π/2N` rad.
pub fn noon_phase_budget(atom_number: u64) -> Result<f64> {
    if atom_number == 0 {
        return Err(Error::InvalidInput("atom number must be >= 1".into()));
    }
    Ok(std::f64::consts::PI / (2.0 * atom_number as f64))
}

/// Perturbation amplitude against the Thomas–Fermi chemical potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distinguishability {
    /// mG
    pub amplitude_mg: f64,
    /// `μ_TF` for one atom, mG; `μ_TF(N) = coefficient · N^{2/5}`.
    pub coefficient_mg: f64,
    pub max_atom_number: u64,
    /// `(N, μ_TF(N) in mG, amplitude > μ_TF)` per requested N.
    pub checks: Vec<(u64, f64, bool)>,
}

pub fn distinguishability_check(
    fit: &AxialFitParams,
    species: &AtomSpecies,
    omegas: [f64; 3],
    atom_numbers: &[u64],
) -> Result<Distinguishability> {
    let amplitude_mg = fit.analytic_amplitude();
    let coefficient_mg = thomas_fermi_mu(species, omegas, 1)?.mu_mg;
    let max_atom_number = if amplitude_mg > coefficient_mg && coefficient_mg > 0.0 {
        (amplitude_mg / coefficient_mg).powf(2.5).floor() as u64
    } else if coefficient_mg == 0.0 && amplitude_mg > 0.0 {
        u64::MAX
    } else {
        0
    };
    let checks = atom_numbers
        .iter()
        .map(|&n| {
            let mu = thomas_fermi_mu(species, omegas, n)?.mu_mg;
            Ok((n, mu, amplitude_mg > mu))
        })
        .collect::<Result<_>>()?;
    Ok(Distinguishability {
        amplitude_mg,
        coefficient_mg,
        max_atom_number,
        checks,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntanglementReport {
    pub overlap_abs: f64,
    #[serde(rename = "contrast_N")]
    pub contrast_n: f64,
    pub entropy_bits: f64,
    pub phi_rad: f64,
    #[serde(rename = "max_distinguishable_N")]
    pub max_distinguishable_n: u64,
}

pub fn entanglement_report(
    state: &CompositeState,
    max_distinguishable_n: u64,
) -> Result<EntanglementReport> {
    Ok(EntanglementReport {
        overlap_abs: branch_overlap(state)?.norm(),
        contrast_n: which_path_contrast(state)?,
        entropy_bits: entanglement_entropy(state)?,
        phi_rad: state.phi,
        max_distinguishable_n,
    })
}

fn outcomes(basis: MeasurementBasis) -> [Conditioning; 2] {
    match basis {
        MeasurementBasis::Computational => [Conditioning::Loop0, Conditioning::Loop1],
        MeasurementBasis::PlusMinus => [Conditioning::Plus, Conditioning::Minus],
    }
}

/// One simulated shot: loop outcome and the position of one detected atom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeSample {
    pub trial: u64,
    pub outcome: Conditioning,
    /// m
    pub position: f64,
}

/// Repeated loop measurements followed by detection of one atom from the
/// conditioned density. Trial `k` draws from its own ChaCha stream `k` of
/// `seed`, so results do not depend on scheduling.
pub fn sample_outcomes(
    state: &CompositeState,
    basis: MeasurementBasis,
    trials: u64,
    seed: u64,
    exec: Execution,
) -> Result<Vec<OutcomeSample>> {
    let [a, b] = outcomes(basis);
    let cdf = |c: Conditioning| -> Result<Option<(f64, Vec<f64>)>> {
        match tof_density(state, c, 0.0) {
            Ok(d) => {
                let mut acc = 0.0;
                let mut cum: Vec<f64> = d
                    .density
                    .iter()
                    .map(|n| {
                        acc += n;
                        acc
                    })
                    .collect();
                let total = acc;
                cum.iter_mut().for_each(|c| *c /= total);
                Ok(Some((d.probability, cum)))
            }
            Err(Error::ZeroProbabilityBranch { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let first = cdf(a)?;
    let second = cdf(b)?;
    let p_first = first.as_ref().map_or(0.0, |f| f.0);
    let grid = state.phi0.grid;
    let trial_ids: Vec<u64> = (0..trials).collect();
    Ok(exec::map(exec, &trial_ids, |&trial| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        let pick_first = rng.gen::<f64>() < p_first;
        let (outcome, cum) = if pick_first {
            (a, &first.as_ref().expect("outcome with p > 0").1)
        } else {
            (b, &second.as_ref().expect("outcome with p > 0").1)
        };
        let u: f64 = rng.gen();
        let j = cum.partition_point(|&c| c < u).min(cum.len() - 1);
        OutcomeSample {
            trial,
            outcome,
            position: grid.position(j),
        }
    }))
}
