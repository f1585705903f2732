//! Magnetic trap characterisation: potential, minimum, frequencies, axial
//! perturbation profiles, distance sweeps and the axial model fit.

mod design;
mod fit;
pub mod minimize;
mod profile;

use serde::{Deserialize, Serialize};

use crate::constants::{BOHR_MAGNETON, RB87_MASS, RB87_SCATTERING_LENGTH};
use crate::magnetostatics::SourceAssembly;
use crate::{Error, Result, Vec3};
use minimize::{hessian_eigen_adaptive, MinimizeOptions, ScalarField};

pub use design::{
    branch_amplitude, calibrate_bar_length, calibrate_wire_radius, move_trap, sweep_distance,
    BarCalibration, CalibrationReport, SolvedTrap, SweepPoint, TrapDesign, PROFILE_HALF_WINDOW,
    PROFILE_SAMPLES,
};
pub use fit::{fit_axial_model, fit_samples, model_extremum_amplitude, AxialFitParams, FitOptions};
pub use profile::{
    axial_profile, local_extrema, perturbation_amplitude, symmetric_samples, AxialLine,
    AxialProfile, ProfileBranch,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomSpecies {
    /// kg
    pub mass: f64,
    /// Product m_F g_F; positive for weak-field seekers.
    pub mf_gf: f64,
    /// s-wave scattering length, m.
    pub scattering_length: f64,
}

impl AtomSpecies {
    /// ⁸⁷Rb in |F = 2, m_F = 2⟩.
    pub fn rb87() -> Self {
        AtomSpecies {
            mass: RB87_MASS,
            mf_gf: 1.0,
            scattering_length: RB87_SCATTERING_LENGTH,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "mass {} must be > 0",
                self.mass
            )));
        }
        if !(self.scattering_length >= 0.0 && self.scattering_length.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "scattering length {} must be >= 0",
                self.scattering_length
            )));
        }
        if !self.mf_gf.is_finite() {
            return Err(Error::InvalidInput("non-finite mF*gF".into()));
        }
        Ok(())
    }

    /// Magnetic moment coupling `mF gF μB`, J/T.
    pub fn moment(&self) -> f64 {
        self.mf_gf * BOHR_MAGNETON
    }

    /// Energy equivalent of a field magnitude, J.
    pub fn energy_of_field(&self, b: f64) -> f64 {
        self.moment() * b
    }

    /// Field magnitude equivalent of an energy, T.
    pub fn field_of_energy(&self, e: f64) -> f64 {
        e / self.moment()
    }
}

/// `V = mF gF μB |B(p)|`.
pub fn potential(assembly: &SourceAssembly, species: &AtomSpecies, p: Vec3) -> Result<f64> {
    Ok(species.energy_of_field(assembly.intensity(p)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapCharacterization {
    pub minimum: Vec3,
    /// |B| at the minimum, T.
    pub bottom_field: f64,
    /// Angular frequencies (ω_x, ω_y, ω_z), rad/s; each eigenmode is assigned
    /// to the lab axis its eigenvector is closest to.
    pub frequencies: [f64; 3],
    /// Eigen-axes matching `frequencies`.
    pub axes: [Vec3; 3],
    /// Largest over smallest Hessian eigenvalue.
    pub hessian_condition: f64,
    pub gradient_norm: f64,
}

impl TrapCharacterization {
    pub fn frequencies_hz(&self) -> [f64; 3] {
        self.frequencies.map(|w| w / std::f64::consts::TAU)
    }

    /// Unit vector of the weakest (axial) mode, oriented towards +y.
    pub fn axial_axis(&self) -> Vec3 {
        let a = self.axes[1];
        if a.y < 0.0 {
            -a
        } else {
            a
        }
    }
}

/// |B| of an assembly as a scalar field.
pub fn intensity_field(assembly: &SourceAssembly) -> impl Fn(Vec3) -> Result<f64> + Sync + '_ {
    move |p| assembly.intensity(p)
}

/// Local minimum of |B| near `guess`; frequencies are left at zero.
pub fn find_minimum(
    assembly: &SourceAssembly,
    species: &AtomSpecies,
    guess: Vec3,
) -> Result<TrapCharacterization> {
    find_minimum_of(
        &intensity_field(assembly),
        species,
        guess,
        &MinimizeOptions::default(),
    )
}

pub fn find_minimum_of(
    field: &dyn ScalarField,
    species: &AtomSpecies,
    guess: Vec3,
    opts: &MinimizeOptions,
) -> Result<TrapCharacterization> {
    species.validate()?;
    let rep = minimize::minimize(field, guess, opts)?;
    Ok(TrapCharacterization {
        minimum: rep.point,
        bottom_field: rep.value,
        frequencies: [0.0; 3],
        axes: [Vec3::X, Vec3::Y, Vec3::Z],
        hessian_condition: rep.curvatures[2] / rep.curvatures[0],
        gradient_norm: rep.gradient_norm,
    })
}

/// Default Hessian step for trap frequencies, m.
pub const FREQUENCY_FD_STEP: f64 = 4e-6;

/// ω_i = sqrt(λ_i / m) from the Richardson-extrapolated Hessian of V.
pub fn trap_frequencies(
    assembly: &SourceAssembly,
    species: &AtomSpecies,
    minimum: Vec3,
) -> Result<([f64; 3], [Vec3; 3])> {
    trap_frequencies_of(
        &intensity_field(assembly),
        species,
        minimum,
        FREQUENCY_FD_STEP,
    )
}

pub fn trap_frequencies_of(
    field: &dyn ScalarField,
    species: &AtomSpecies,
    minimum: Vec3,
    step: f64,
) -> Result<([f64; 3], [Vec3; 3])> {
    species.validate()?;
    let (vals, vecs) = hessian_eigen_adaptive(field, minimum, step)?;
    let vals = vals.map(|v| v * species.moment());
    if let Some(&neg) = vals.iter().find(|&&v| v < 0.0) {
        return Err(Error::NegativeCurvature { eigenvalue: neg });
    }
    // match each eigenvector to the lab axis it is most aligned with
    let mut freqs = [0.0; 3];
    let mut axes = [Vec3::ZERO; 3];
    let mut taken = [false; 3];
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let ma = vecs[a]
            .to_array()
            .map(f64::abs)
            .into_iter()
            .fold(0.0, f64::max);
        let mb = vecs[b]
            .to_array()
            .map(f64::abs)
            .into_iter()
            .fold(0.0, f64::max);
        mb.total_cmp(&ma)
    });
    for k in order {
        let comps = vecs[k].to_array().map(f64::abs);
        let lab = (0..3)
            .filter(|&i| !taken[i])
            .max_by(|&a, &b| comps[a].total_cmp(&comps[b]))
            .expect("free axis");
        taken[lab] = true;
        freqs[lab] = (vals[k] / species.mass).sqrt();
        axes[lab] = vecs[k];
    }
    Ok((freqs, axes))
}

/// Minimum plus frequencies and Hessian condition.
pub fn characterize(
    assembly: &SourceAssembly,
    species: &AtomSpecies,
    guess: Vec3,
) -> Result<TrapCharacterization> {
    let mut c = find_minimum(assembly, species, guess)?;
    let (f, axes) = trap_frequencies(assembly, species, c.minimum)?;
    c.frequencies = f;
    c.axes = axes;
    let min = f.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = f.iter().cloned().fold(0.0, f64::max);
    c.hessian_condition = (max / min).powi(2);
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::magnetostatics::UniformBias;
    use crate::units::GAUSS;
    use std::f64::consts::TAU;

    #[test]
    fn potential_values() {
        let sp = AtomSpecies::rb87();
        let a = SourceAssembly::new(vec![UniformBias::new(Vec3::new(0.0, GAUSS, 0.0))
            .unwrap()
            .into()])
        .unwrap();
        let v = potential(&a, &sp, Vec3::ZERO).unwrap();
        assert!((v - 9.274e-28).abs() < 1e-31);
        let zero = SourceAssembly::new(vec![UniformBias::new(Vec3::ZERO).unwrap().into()]).unwrap();
        assert_eq!(potential(&zero, &sp, Vec3::ZERO).unwrap(), 0.0);
        let a2 = a.scaled(2.0).unwrap();
        assert_eq!(potential(&a2, &sp, Vec3::X).unwrap(), 2.0 * v);
    }

    fn synthetic(c: [f64; 3], r0: Vec3) -> impl Fn(Vec3) -> Result<f64> + Sync {
        move |p: Vec3| {
            let d = p - r0;
            Ok(1e-4 + c[0] * d.x * d.x + c[1] * d.y * d.y + c[2] * d.z * d.z)
        }
    }

    #[test]
    fn synthetic_frequencies_exact() {
        let sp = AtomSpecies::rb87();
        let target = [540.0 * TAU, 10.0 * TAU, 300.0 * TAU];
        // V = μ c r² = ½ m ω² r²
        let c = target.map(|w| 0.5 * sp.mass * w * w / sp.moment());
        let r0 = Vec3::new(1e-6, 2e-6, 500e-6);
        let f = synthetic(c, r0);
        let (w, _) = trap_frequencies_of(&f, &sp, r0, FREQUENCY_FD_STEP).unwrap();
        for i in 0..3 {
            assert!((w[i] - target[i]).abs() < 1e-6 * target[i], "{i}");
        }
        let shifted = |p: Vec3| Ok(f(p)? + 3e-3);
        let (w2, _) = trap_frequencies_of(&shifted, &sp, r0, FREQUENCY_FD_STEP).unwrap();
        for i in 0..3 {
            assert!((w2[i] - w[i]).abs() < 1e-6 * w[i]);
        }
    }

    #[test]
    fn synthetic_minimum_exact() {
        let sp = AtomSpecies::rb87();
        let r0 = Vec3::new(-4e-6, 7e-6, 503e-6);
        let f = synthetic([0.2, 6e-5, 0.2], r0);
        let c = find_minimum_of(
            &f,
            &sp,
            Vec3::new(0.0, 0.0, 500e-6),
            &MinimizeOptions::default(),
        )
        .unwrap();
        assert!((c.minimum - r0).norm() < 1e-9);
    }

    #[test]
    fn negative_curvature_is_an_error() {
        let sp = AtomSpecies::rb87();
        let f = |p: Vec3| Ok(p.x * p.x - p.y * p.y + p.z * p.z);
        assert!(matches!(
            trap_frequencies_of(&f, &sp, Vec3::ZERO, 1e-6),
            Err(Error::NegativeCurvature { .. })
        ));
    }
}
