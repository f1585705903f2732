use serde::{Deserialize, Serialize};

use crate::trap::{AtomSpecies, AxialFitParams};
use crate::units::{MICROMETER, MILLIGAUSS};
use crate::{Error, Result};

/// Threshold on `max (dω/dt)/ω²` below which a ramp counts as adiabatic.
pub const ADIABATIC_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RampShape {
    Linear,
    /// `3u² − 2u³`
    Smoothstep,
}

impl RampShape {
    /// Ramp fraction at `u = t/T ∈ [0, 1]`.
    pub fn fraction(self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match self {
            RampShape::Linear => u,
            RampShape::Smoothstep => u * u * (3.0 - 2.0 * u),
        }
    }
}

/// Switch-on path of the loop perturbation. The trap displacement is held
/// at zero; the axial frequency may be ramped as well.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RampSchedule {
    /// T, s.
    pub duration: f64,
    pub shape: RampShape,
    /// Perturbation strength at `t = T`, T·m.
    pub a_final: f64,
    /// Axial angular frequency at `t = 0`, rad/s.
    pub omega_start: f64,
    /// Axial angular frequency at `t = T`, rad/s.
    pub omega_end: f64,
}

impl RampSchedule {
    pub fn new(duration: f64, shape: RampShape, a_final: f64, omega: f64) -> Result<Self> {
        let s = RampSchedule {
            duration,
            shape,
            a_final,
            omega_start: omega,
            omega_end: omega,
        };
        s.validate()?;
        Ok(s)
    }

    /// Ramp towards the fitted perturbation with the axial frequency implied
    /// by the fitted curvature `k0`.
    pub fn for_fit(
        fit: &AxialFitParams,
        species: &AtomSpecies,
        duration: f64,
        shape: RampShape,
    ) -> Result<Self> {
        RampSchedule::new(duration, shape, fit_a_si(fit), fit_omega(fit, species)?)
    }

    pub fn with_omega_path(mut self, omega_start: f64, omega_end: f64) -> Result<Self> {
        self.omega_start = omega_start;
        self.omega_end = omega_end;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "ramp duration {} must be >= 0",
                self.duration
            )));
        }
        if !(self.omega_start > 0.0 && self.omega_end > 0.0) {
            return Err(Error::InvalidInput("trap frequency must stay > 0".into()));
        }
        if !self.a_final.is_finite() {
            return Err(Error::InvalidInput(
                "non-finite perturbation strength".into(),
            ));
        }
        Ok(())
    }

    pub fn fraction(&self, t: f64) -> f64 {
        if self.duration == 0.0 {
            return 1.0;
        }
        self.shape.fraction(t / self.duration)
    }

    /// a(t), T·m.
    pub fn a_of_t(&self, t: f64) -> f64 {
        self.a_final * self.fraction(t)
    }

    /// ω(t), rad/s.
    pub fn omega_of_t(&self, t: f64) -> f64 {
        self.omega_start + (self.omega_end - self.omega_start) * self.fraction(t)
    }

    /// Trap displacement, m; held at zero.
    pub fn z0_of_t(&self, _t: f64) -> f64 {
        0.0
    }
}

/// `a` of a fit (mG·µm) in T·m.
pub fn fit_a_si(fit: &AxialFitParams) -> f64 {
    fit.a * MILLIGAUSS * MICROMETER
}

/// Axial ω from the fitted curvature: `½mω² = μ k0`.
pub fn fit_omega(fit: &AxialFitParams, species: &AtomSpecies) -> Result<f64> {
    let k0 = fit.k0 * MILLIGAUSS / (MICROMETER * MICROMETER);
    let w2 = 2.0 * species.moment() * k0 / species.mass;
    if !(w2 > 0.0) {
        return Err(Error::NegativeCurvature { eigenvalue: k0 });
    }
    Ok(w2.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdiabaticReport {
    /// `max_t (dω/dt)/ω²`
    pub margin: f64,
    /// Time of the maximum, s.
    pub t_at_max: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// `max (dω/dt)/ω²` over a 10⁴-interval mesh by central differences.
pub fn adiabatic_criterion(schedule: &RampSchedule) -> AdiabaticReport {
    let n = 10_000;
    let t_end = schedule.duration;
    let mut margin = 0.0_f64;
    let mut t_at_max = 0.0;
    if t_end > 0.0 {
        let h = t_end / n as f64;
        for i in 0..=n {
            let t = i as f64 * h;
            let (lo, hi) = ((t - h).max(0.0), (t + h).min(t_end));
            let rate = (schedule.omega_of_t(hi) - schedule.omega_of_t(lo)) / (hi - lo);
            let w = schedule.omega_of_t(t);
            let m = rate.abs() / (w * w);
            if m > margin {
                margin = m;
                t_at_max = t;
            }
        }
    }
    AdiabaticReport {
        margin,
        t_at_max,
        threshold: ADIABATIC_THRESHOLD,
        pass: margin < ADIABATIC_THRESHOLD,
    }
}
