//! Strang-split spectral propagation in real and imaginary time.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{Grid1D, Wavefunction1D};
use crate::constants::HBAR;
use crate::trap::AtomSpecies;
use crate::{Error, Result};

/// Largest `|dt|·max|V|/ħ` accepted per real-time step.
pub const STABILITY_LIMIT: f64 = 0.1;

/// Potential energy (J) on the grid at time `t`.
pub trait PotentialPath: Sync {
    fn fill(&self, t: f64, out: &mut [f64]);
}

/// Time-independent potential.
#[derive(Debug, Clone, Copy)]
pub struct Static<'a>(pub &'a [f64]);

impl PotentialPath for Static<'_> {
    fn fill(&self, _t: f64, out: &mut [f64]) {
        out.copy_from_slice(self.0);
    }
}

/// Potential given by a closure.
pub struct FromFn<F>(pub F);

impl<F: Fn(f64, &mut [f64]) + Sync> PotentialPath for FromFn<F> {
    fn fill(&self, t: f64, out: &mut [f64]) {
        (self.0)(t, out)
    }
}

/// Normalised forward/inverse FFT pair for one grid size.
#[derive(Clone)]
pub(crate) struct Fourier {
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    inv_n: f64,
}

impl Fourier {
    pub(crate) fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        let len = fft
            .get_inplace_scratch_len()
            .max(ifft.get_inplace_scratch_len());
        Fourier {
            fft,
            ifft,
            scratch: vec![Complex64::default(); len],
            inv_n: 1.0 / n as f64,
        }
    }

    pub(crate) fn forward(&mut self, data: &mut [Complex64]) {
        self.fft.process_with_scratch(data, &mut self.scratch);
    }

    pub(crate) fn inverse(&mut self, data: &mut [Complex64]) {
        self.ifft.process_with_scratch(data, &mut self.scratch);
        for a in data.iter_mut() {
            *a *= self.inv_n;
        }
    }
}

/// Kinetic energy `ħ²k²/2m` per FFT mode, J.
fn kinetic_energies(grid: &Grid1D, mass: f64) -> Vec<f64> {
    grid.wavenumbers()
        .into_iter()
        .map(|k| HBAR * HBAR * k * k / (2.0 * mass))
        .collect()
}

/// Real-time Strang stepper `e^{−iVdt/2ħ} e^{−iTdt/ħ} e^{−iVdt/2ħ}` with the
/// potential taken at the step midpoint and an optional `g1d N |ψ|²` term.
pub struct Propagator {
    fourier: Fourier,
    kinetic_phase: Vec<Complex64>,
    potential: Vec<f64>,
    dt: f64,
    interaction: f64,
}

impl Propagator {
    pub fn new(
        grid: &Grid1D,
        species: &AtomSpecies,
        dt: f64,
        g1d: f64,
        atom_number: u64,
    ) -> Result<Self> {
        species.validate()?;
        if !(dt != 0.0 && dt.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "time step {dt} must be non-zero"
            )));
        }
        if !(g1d >= 0.0 && g1d.is_finite()) {
            return Err(Error::InvalidInput(format!("g1d {g1d} must be >= 0")));
        }
        let kinetic_phase = kinetic_energies(grid, species.mass)
            .into_iter()
            .map(|e| Complex64::from_polar(1.0, -e * dt / HBAR))
            .collect();
        Ok(Propagator {
            fourier: Fourier::new(grid.len()),
            kinetic_phase,
            potential: vec![0.0; grid.len()],
            dt,
            interaction: g1d * atom_number as f64,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advance `psi` from `t` to `t + dt`.
    pub fn step(&mut self, psi: &mut [Complex64], path: &dyn PotentialPath, t: f64) -> Result<()> {
        path.fill(t + 0.5 * self.dt, &mut self.potential);
        let vmax = self.potential.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let ratio = self.dt.abs() * vmax / HBAR;
        if !(ratio < STABILITY_LIMIT) {
            return Err(Error::StabilityGuardTripped { ratio });
        }
        self.half_potential(psi);
        self.fourier.forward(psi);
        for (a, k) in psi.iter_mut().zip(&self.kinetic_phase) {
            *a *= k;
        }
        self.fourier.inverse(psi);
        self.half_potential(psi);
        Ok(())
    }

    fn half_potential(&self, psi: &mut [Complex64]) {
        let c = -0.5 * self.dt / HBAR;
        let g = self.interaction;
        for (a, v) in psi.iter_mut().zip(&self.potential) {
            let u = v + g * a.norm_sqr();
            *a *= Complex64::from_polar(1.0, c * u);
        }
    }
}

/// Propagate `psi` for `steps` steps of `dt` starting at `t = 0`, checking
/// the window every 1000 steps and at the end.
pub fn propagate(
    psi: &Wavefunction1D,
    species: &AtomSpecies,
    path: &dyn PotentialPath,
    dt: f64,
    steps: usize,
    g1d: f64,
) -> Result<Wavefunction1D> {
    let mut prop = Propagator::new(&psi.grid, species, dt, g1d, psi.atom_number)?;
    let mut out = psi.clone();
    for s in 0..steps {
        prop.step(&mut out.amplitudes, path, s as f64 * dt)?;
        if (s + 1) % 1000 == 0 {
            out.check_boundary()?;
        }
    }
    out.check_boundary()?;
    Ok(out)
}

/// Exact free evolution for time `t` (one kinetic phase in k-space). The
/// window is not checked; wrap-around shows up as boundary mass.
pub fn free_propagate(
    psi: &Wavefunction1D,
    species: &AtomSpecies,
    t: f64,
) -> Result<Wavefunction1D> {
    species.validate()?;
    if !t.is_finite() {
        return Err(Error::InvalidInput("non-finite expansion time".into()));
    }
    let mut out = psi.clone();
    if t == 0.0 {
        return Ok(out);
    }
    let mut fourier = Fourier::new(psi.len());
    fourier.forward(&mut out.amplitudes);
    for (a, e) in out
        .amplitudes
        .iter_mut()
        .zip(kinetic_energies(&psi.grid, species.mass))
    {
        *a *= Complex64::from_polar(1.0, -e * t / HBAR);
    }
    fourier.inverse(&mut out.amplitudes);
    Ok(out)
}

/// Energy pieces of a state in a static potential, J per particle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyTerms {
    pub kinetic: f64,
    pub potential: f64,
    /// `g1d N ∫|ψ|⁴`.
    pub interaction: f64,
}

impl EnergyTerms {
    /// Gross–Pitaevskii energy functional (interaction counted once half).
    pub fn energy(&self) -> f64 {
        self.kinetic + self.potential + 0.5 * self.interaction
    }

    /// Chemical potential.
    pub fn mu(&self) -> f64 {
        self.kinetic + self.potential + self.interaction
    }
}

pub(crate) struct EnergyEvaluator {
    fourier: Fourier,
    kinetic: Vec<f64>,
    buffer: Vec<Complex64>,
    dy: f64,
}

impl EnergyEvaluator {
    pub(crate) fn new(grid: &Grid1D, mass: f64) -> Self {
        EnergyEvaluator {
            fourier: Fourier::new(grid.len()),
            kinetic: kinetic_energies(grid, mass),
            buffer: vec![Complex64::default(); grid.len()],
            dy: grid.spacing(),
        }
    }

    pub(crate) fn terms(&mut self, psi: &[Complex64], potential: &[f64], g: f64) -> EnergyTerms {
        self.buffer.copy_from_slice(psi);
        self.fourier.forward(&mut self.buffer);
        let n = psi.len() as f64;
        let kinetic = self
            .buffer
            .iter()
            .zip(&self.kinetic)
            .map(|(a, e)| a.norm_sqr() * e)
            .sum::<f64>()
            * self.dy
            / n;
        let mut pot = 0.0;
        let mut quartic = 0.0;
        for (a, v) in psi.iter().zip(potential) {
            let d = a.norm_sqr();
            pot += v * d;
            quartic += d * d;
        }
        EnergyTerms {
            kinetic,
            potential: pot * self.dy,
            interaction: g * quartic * self.dy,
        }
    }
}

/// `μ = ⟨ψ|−ħ²∂²/2m + V + g1d N|ψ|²|ψ⟩` with a spectral kinetic term, J.
pub fn chemical_potential(
    psi: &Wavefunction1D,
    species: &AtomSpecies,
    potential: &[f64],
    g1d: f64,
) -> Result<f64> {
    Ok(energy_terms(psi, species, potential, g1d)?.mu())
}

pub fn energy_terms(
    psi: &Wavefunction1D,
    species: &AtomSpecies,
    potential: &[f64],
    g1d: f64,
) -> Result<EnergyTerms> {
    if potential.len() != psi.len() {
        return Err(Error::InvalidInput(
            "potential and wavefunction lengths differ".into(),
        ));
    }
    let mut ev = EnergyEvaluator::new(&psi.grid, species.mass);
    Ok(ev.terms(&psi.amplitudes, potential, g1d * psi.atom_number as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundStateOptions {
    /// Characteristic trap frequency ω, rad/s; sets the step and tolerance.
    pub omega_scale: f64,
    /// Imaginary-time step in units of 1/ω.
    pub dtau_factor: f64,
    /// Stop when the energy changes by less than this times ħω in one step.
    pub tolerance: f64,
    pub max_steps: usize,
    /// Keep the energy after every step.
    pub record_trace: bool,
}

impl GroundStateOptions {
    pub fn new(omega_scale: f64) -> Self {
        GroundStateOptions {
            omega_scale,
            dtau_factor: 0.01,
            tolerance: 1e-12,
            max_steps: 500_000,
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundStateReport {
    pub psi: Wavefunction1D,
    /// Energy functional per particle, J.
    pub energy: f64,
    /// Chemical potential, J.
    pub mu: f64,
    pub steps: usize,
    /// Energy after each step when requested, J.
    pub trace: Vec<f64>,
}

/// Imaginary-time ground state of a static potential (J on the grid).
pub fn ground_state(
    grid: &Grid1D,
    potential: &[f64],
    species: &AtomSpecies,
    g1d: f64,
    atom_number: u64,
    opts: &GroundStateOptions,
) -> Result<Wavefunction1D> {
    Ok(ground_state_from(grid, potential, species, g1d, atom_number, None, opts)?.psi)
}

/// As [`ground_state`], optionally warm-started from `initial`.
pub fn ground_state_from(
    grid: &Grid1D,
    potential: &[f64],
    species: &AtomSpecies,
    g1d: f64,
    atom_number: u64,
    initial: Option<&Wavefunction1D>,
    opts: &GroundStateOptions,
) -> Result<GroundStateReport> {
    species.validate()?;
    if potential.len() != grid.len() {
        return Err(Error::InvalidInput(
            "potential length differs from grid".into(),
        ));
    }
    if !(opts.omega_scale > 0.0 && opts.dtau_factor > 0.0) {
        return Err(Error::InvalidInput(
            "omega_scale and dtau_factor must be > 0".into(),
        ));
    }
    if !(g1d >= 0.0 && g1d.is_finite()) {
        return Err(Error::InvalidInput(format!("g1d {g1d} must be >= 0")));
    }
    let dtau = opts.dtau_factor / opts.omega_scale;
    let tol = opts.tolerance * HBAR * opts.omega_scale;
    let g = g1d * atom_number as f64;

    let mut psi = match initial {
        Some(p) if p.grid == *grid => Wavefunction1D {
            atom_number,
            ..p.clone()
        },
        _ => {
            // Gaussian at the potential minimum with the oscillator width for ω
            let (jmin, _) = potential
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .expect("non-empty potential");
            let width = (HBAR / (species.mass * opts.omega_scale)).sqrt();
            Wavefunction1D::gaussian(*grid, grid.position(jmin), width, 0.0, atom_number)?
        }
    };

    let mut fourier = Fourier::new(grid.len());
    let kinetic_decay: Vec<f64> = kinetic_energies(grid, species.mass)
        .into_iter()
        .map(|e| (-e * dtau / HBAR).exp())
        .collect();
    let mut ev = EnergyEvaluator::new(grid, species.mass);
    let half = |psi: &mut [Complex64]| {
        for (a, v) in psi.iter_mut().zip(potential) {
            let u = v + g * a.norm_sqr();
            *a *= (-0.5 * dtau * u / HBAR).exp();
        }
    };

    let mut energy = ev.terms(&psi.amplitudes, potential, g).energy();
    let mut trace = Vec::new();
    for step in 1..=opts.max_steps {
        half(&mut psi.amplitudes);
        fourier.forward(&mut psi.amplitudes);
        for (a, k) in psi.amplitudes.iter_mut().zip(&kinetic_decay) {
            *a *= k;
        }
        fourier.inverse(&mut psi.amplitudes);
        half(&mut psi.amplitudes);
        psi.normalize();
        let terms = ev.terms(&psi.amplitudes, potential, g);
        let e = terms.energy();
        if opts.record_trace {
            trace.push(e);
        }
        let change = (energy - e).abs();
        energy = e;
        if change < tol {
            psi.check_boundary()?;
            return Ok(GroundStateReport {
                psi,
                energy,
                mu: terms.mu(),
                steps: step,
                trace,
            });
        }
    }
    Err(Error::NoConvergence {
        steps: opts.max_steps,
    })
}
