//! Evolution of the condensate on each loop branch while the perturbation is
//! ramped on, and the relative phase accumulated between the branches.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::split_step::{EnergyEvaluator, PotentialPath, Propagator, STABILITY_LIMIT};
use super::{ground_state_from, GroundStateOptions, RampSchedule, Wavefunction1D};
use crate::constants::HBAR;
use crate::exec::{self, Execution};
use crate::fluxloop::Branch;
use crate::trap::{AtomSpecies, AxialFitParams};
use crate::units::{s_to_ms, sig9, tesla_to_mg, MICROMETER};
use crate::{Error, Result};

/// Instantaneous-ground-state fidelity below which a run is flagged as
/// non-adiabatic.
pub const FIDELITY_FLOOR: f64 = 0.9;

/// `½mω(t)²y² ± μ·2a(t)y/σ²·exp(−y²/σ²)` on a grid; `+` for the clockwise
/// branch. The constant offset is dropped.
#[derive(Debug, Clone)]
pub struct AxialPotential {
    half_m_y2: Vec<f64>,
    odd_shape: Vec<f64>,
    schedule: RampSchedule,
    sign: f64,
}

impl AxialPotential {
    pub fn new(
        grid: &super::Grid1D,
        species: &AtomSpecies,
        sigma: f64,
        schedule: RampSchedule,
        branch: Branch,
    ) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidInput("perturbation width must be > 0".into()));
        }
        schedule.validate()?;
        let s2 = sigma * sigma;
        let ys = grid.positions();
        Ok(AxialPotential {
            half_m_y2: ys.iter().map(|y| 0.5 * species.mass * y * y).collect(),
            odd_shape: ys
                .iter()
                .map(|y| species.moment() * 2.0 * y / s2 * (-y * y / s2).exp())
                .collect(),
            schedule,
            sign: branch.perturbation_sign(),
        })
    }

    /// Potential from a fit in display units (σ0 in µm).
    pub fn from_fit(
        grid: &super::Grid1D,
        species: &AtomSpecies,
        fit: &AxialFitParams,
        schedule: RampSchedule,
        branch: Branch,
    ) -> Result<Self> {
        AxialPotential::new(grid, species, fit.sigma0 * MICROMETER, schedule, branch)
    }

    pub fn at(&self, t: f64) -> Vec<f64> {
        let mut v = vec![0.0; self.half_m_y2.len()];
        self.fill(t, &mut v);
        v
    }

    /// Largest |V| over the ramp (sampled at start, middle and end).
    pub fn max_abs(&self) -> f64 {
        let t = self.schedule.duration;
        [0.0, 0.5 * t, t]
            .iter()
            .flat_map(|&ti| self.at(ti))
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl PotentialPath for AxialPotential {
    fn fill(&self, t: f64, out: &mut [f64]) {
        let w = self.schedule.omega_of_t(t);
        let a = self.sign * self.schedule.a_of_t(t);
        for ((o, h), s) in out.iter_mut().zip(&self.half_m_y2).zip(&self.odd_shape) {
            *o = h * w * w + a * s;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionOptions {
    /// Real-time step, s; `None` picks the largest step within half the
    /// stability limit that divides T evenly.
    pub dt: Option<f64>,
    /// Steps between μ and fidelity samples.
    pub sample_every: usize,
    /// Mean-field coupling; 0 for the interaction-free Hamiltonian.
    pub g1d: f64,
    /// Imaginary-time step for the instantaneous ground states, in 1/ω.
    pub gs_dtau_factor: f64,
    pub gs_tolerance: f64,
    /// Times (s) at which to keep a copy of ψ; each is taken at the first
    /// step boundary at or after the requested time.
    pub snapshot_times: Vec<f64>,
}

impl Default for EvolutionOptions {
    fn default() -> Self {
        EvolutionOptions {
            dt: None,
            sample_every: 50,
            g1d: 0.0,
            gs_dtau_factor: 0.01,
            gs_tolerance: 1e-12,
            snapshot_times: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchResult {
    pub branch: Branch,
    pub psi: Wavefunction1D,
    /// (t, μ) with t in s and μ in J.
    pub mu_samples: Vec<(f64, f64)>,
    /// (t, |⟨ψ(t)|gs(t)⟩|²).
    pub fidelity_samples: Vec<(f64, f64)>,
    /// Adiabatic geometric phase, rad; zero for real instantaneous eigenstates.
    pub geometric_phase: f64,
    pub dt: f64,
    pub steps: usize,
    /// Instantaneous ground state at `t = T`.
    pub final_ground_state: Wavefunction1D,
    /// (t, ψ(t)) for the requested snapshot times.
    pub snapshots: Vec<(f64, Wavefunction1D)>,
}

impl BranchResult {
    pub fn times(&self) -> Vec<f64> {
        self.mu_samples.iter().map(|s| s.0).collect()
    }

    pub fn min_fidelity(&self) -> f64 {
        self.fidelity_samples
            .iter()
            .map(|s| s.1)
            .fold(1.0, f64::min)
    }

    pub fn final_fidelity(&self) -> f64 {
        self.fidelity_samples.last().map_or(1.0, |s| s.1)
    }

    /// True when the run dropped below [`FIDELITY_FLOOR`].
    pub fn below_floor(&self) -> bool {
        self.min_fidelity() < FIDELITY_FLOOR
    }
}

fn step_plan(
    schedule: &RampSchedule,
    potential: &AxialPotential,
    opts: &EvolutionOptions,
) -> Result<(f64, usize)> {
    let t_end = schedule.duration;
    if t_end == 0.0 {
        return Ok((0.0, 0));
    }
    let dt_max = match opts.dt {
        Some(dt) if dt > 0.0 => dt,
        Some(dt) => return Err(Error::InvalidInput(format!("time step {dt} must be > 0"))),
        None => 0.5 * STABILITY_LIMIT * HBAR / potential.max_abs().max(f64::MIN_POSITIVE),
    };
    let steps = (t_end / dt_max).ceil().max(1.0) as usize;
    Ok((t_end / steps as f64, steps))
}

/// Propagate `psi_init` (the ground state at `a = 0`) on `branch` while the
/// perturbation ramps on, sampling μ and instantaneous-ground-state fidelity
/// every `sample_every` steps and at `T`.
pub fn branch_evolution(
    psi_init: &Wavefunction1D,
    species: &AtomSpecies,
    schedule: &RampSchedule,
    fit: &AxialFitParams,
    branch: Branch,
    opts: &EvolutionOptions,
) -> Result<BranchResult> {
    if opts.sample_every == 0 {
        return Err(Error::InvalidInput("sample_every must be >= 1".into()));
    }
    let grid = psi_init.grid;
    let potential = AxialPotential::from_fit(&grid, species, fit, *schedule, branch)?;
    let (dt, steps) = step_plan(schedule, &potential, opts)?;
    let g = opts.g1d * psi_init.atom_number as f64;

    let omega_scale = schedule.omega_start.min(schedule.omega_end);
    let gs_opts = GroundStateOptions {
        dtau_factor: opts.gs_dtau_factor,
        tolerance: opts.gs_tolerance,
        ..GroundStateOptions::new(omega_scale)
    };
    let mut energy = EnergyEvaluator::new(&grid, species.mass);
    let mut v = vec![0.0; grid.len()];
    let mut gs_cache = psi_init.clone();
    let mut mu_samples = Vec::new();
    let mut fidelity_samples = Vec::new();

    let mut sample = |psi: &Wavefunction1D, t: f64, cache: &mut Wavefunction1D| -> Result<()> {
        potential.fill(t, &mut v);
        mu_samples.push((t, energy.terms(&psi.amplitudes, &v, g).mu()));
        let gs = ground_state_from(
            &grid,
            &v,
            species,
            opts.g1d,
            psi.atom_number,
            Some(cache),
            &gs_opts,
        )?;
        *cache = gs.psi;
        fidelity_samples.push((t, psi.fidelity(cache)?.min(1.0)));
        Ok(())
    };

    let mut wanted: Vec<f64> = opts.snapshot_times.clone();
    wanted.sort_by(f64::total_cmp);
    let mut wanted = wanted.into_iter().peekable();
    let mut snapshots = Vec::new();
    let mut take = |psi: &Wavefunction1D, t: f64, last: bool| {
        while let Some(&w) = wanted.peek() {
            if w > t && !last {
                break;
            }
            snapshots.push((t, psi.clone()));
            wanted.next();
        }
    };

    let mut psi = psi_init.clone();
    sample(&psi, 0.0, &mut gs_cache)?;
    take(&psi, 0.0, steps == 0);
    if steps > 0 {
        let mut prop = Propagator::new(&grid, species, dt, opts.g1d, psi.atom_number)?;
        for s in 0..steps {
            prop.step(&mut psi.amplitudes, &potential, s as f64 * dt)?;
            let done = s + 1;
            let t_now = if done == steps {
                schedule.duration
            } else {
                done as f64 * dt
            };
            take(&psi, t_now, done == steps);
            if done % opts.sample_every == 0 || done == steps {
                psi.check_boundary()?;
                sample(&psi, t_now, &mut gs_cache)?;
            }
        }
    }
    Ok(BranchResult {
        branch,
        psi,
        mu_samples,
        fidelity_samples,
        geometric_phase: 0.0,
        dt,
        steps,
        final_ground_state: gs_cache,
        snapshots,
    })
}

/// Both branches from the same initial state, concurrently when allowed.
pub fn evolve_branches(
    psi_init: &Wavefunction1D,
    species: &AtomSpecies,
    schedule: &RampSchedule,
    fit: &AxialFitParams,
    opts: &EvolutionOptions,
    exec: Execution,
) -> Result<(BranchResult, BranchResult)> {
    let run = |b| branch_evolution(psi_init, species, schedule, fit, b, opts);
    let (r0, r1) = exec::join(
        exec,
        || run(Branch::Clockwise),
        || run(Branch::Anticlockwise),
    );
    Ok((r0?, r1?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSeries {
    /// s
    pub t: Vec<f64>,
    /// Φ(t), rad.
    pub unwrapped: Vec<f64>,
    /// Φ(t) mod 2π in [0, 2π).
    pub wrapped: Vec<f64>,
}

impl PhaseSeries {
    pub fn last(&self) -> f64 {
        self.unwrapped.last().copied().unwrap_or(0.0)
    }
}

/// `Φ(t) = N ∫₀ᵗ (μ₀ − μ₁)/ħ dt' + γ₁ − γ₀` by the trapezoidal rule on the
/// common sample mesh.
pub fn relative_phase(
    r0: &BranchResult,
    r1: &BranchResult,
    atom_number: u64,
) -> Result<PhaseSeries> {
    phase_from_samples(
        &r0.mu_samples,
        &r1.mu_samples,
        atom_number,
        r1.geometric_phase - r0.geometric_phase,
    )
}

/// As [`relative_phase`] on raw (t, μ) samples.
pub fn phase_from_samples(
    mu0: &[(f64, f64)],
    mu1: &[(f64, f64)],
    atom_number: u64,
    geometric: f64,
) -> Result<PhaseSeries> {
    if mu0.len() != mu1.len() || mu0.iter().zip(mu1).any(|(a, b)| a.0 != b.0) {
        return Err(Error::MeshMismatch);
    }
    let n = atom_number as f64;
    let mut t = Vec::with_capacity(mu0.len());
    let mut unwrapped = Vec::with_capacity(mu0.len());
    let mut acc = 0.0;
    for i in 0..mu0.len() {
        if i > 0 {
            let h = mu0[i].0 - mu0[i - 1].0;
            let d_prev = mu0[i - 1].1 - mu1[i - 1].1;
            let d_here = mu0[i].1 - mu1[i].1;
            acc += 0.5 * h * (d_prev + d_here);
        }
        t.push(mu0[i].0);
        unwrapped.push(n * acc / HBAR + geometric);
    }
    let wrapped = unwrapped
        .iter()
        .map(|p| p.rem_euclid(std::f64::consts::TAU))
        .collect();
    Ok(PhaseSeries {
        t,
        unwrapped,
        wrapped,
    })
}

/// Time series `t_ms,mu0_mG,mu1_mG,Phi_rad,fidelity0,fidelity1`.
pub fn timeseries_csv(
    r0: &BranchResult,
    r1: &BranchResult,
    phase: &PhaseSeries,
    species: &AtomSpecies,
) -> Result<String> {
    let n = phase.t.len();
    if r0.mu_samples.len() != n || r1.mu_samples.len() != n {
        return Err(Error::MeshMismatch);
    }
    let mg = |e: f64| tesla_to_mg(species.field_of_energy(e));
    let mut out = String::from("t_ms,mu0_mG,mu1_mG,Phi_rad,fidelity0,fidelity1\n");
    for i in 0..n {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            sig9(s_to_ms(phase.t[i])),
            sig9(mg(r0.mu_samples[i].1)),
            sig9(mg(r1.mu_samples[i].1)),
            sig9(phase.unwrapped[i]),
            sig9(r0.fidelity_samples[i].1),
            sig9(r1.fidelity_samples[i].1)
        );
    }
    Ok(out)
}
