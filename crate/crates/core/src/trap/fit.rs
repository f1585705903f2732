//! Levenberg–Marquardt fit of `B0 + k0 y² + (2 a y / σ0²) exp(−y²/σ0²)` to an
//! axial profile. Works in display units (mG, µm) so all four parameters are
//! of moderate size.

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::storage::Owned;
use nalgebra::{DVector, Dyn, OMatrix, Vector4, U4};
use serde::{Deserialize, Serialize};

use super::minimize::golden_section;
use super::profile::{AxialProfile, MIN_PROFILE_SAMPLES};
use crate::{Error, Result};

/// Sample variance below which a profile is treated as flat, mG².
pub const DEGENERATE_VARIANCE: f64 = 1e-18;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxialFitParams {
    /// mG
    pub b0: f64,
    /// mG/µm²
    pub k0: f64,
    /// µm
    pub sigma0: f64,
    /// mG·µm
    pub a: f64,
    /// mG
    pub residual_rms: f64,
}

impl AxialFitParams {
    pub fn new(b0: f64, k0: f64, sigma0: f64, a: f64) -> Self {
        AxialFitParams {
            b0,
            k0,
            sigma0,
            a,
            residual_rms: 0.0,
        }
    }

    /// Model value at `y` µm, mG.
    pub fn eval(&self, y: f64) -> f64 {
        model(&[self.b0, self.k0, self.sigma0, self.a], y)
    }

    /// Odd (loop) term alone at `y` µm, mG.
    pub fn odd_term(&self, y: f64) -> f64 {
        let s2 = self.sigma0 * self.sigma0;
        2.0 * self.a * y / s2 * (-y * y / s2).exp()
    }

    /// Peak-to-trough of the odd term, `2√2 e^{−1/2} |a| / σ0`, mG.
    pub fn analytic_amplitude(&self) -> f64 {
        2.0 * std::f64::consts::SQRT_2 * (-0.5f64).exp() * self.a.abs() / self.sigma0
    }

    /// Same parameters with the sign of `a` flipped (the other loop branch).
    pub fn mirrored(&self) -> Self {
        AxialFitParams {
            a: -self.a,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Initial width, µm; twice the loop radius by convention.
    pub sigma_hint: f64,
    pub max_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            sigma_hint: 10.0,
            max_iterations: 2000,
        }
    }
}

fn model(p: &[f64; 4], y: f64) -> f64 {
    let [b0, k0, s, a] = *p;
    let s2 = s * s;
    b0 + k0 * y * y + 2.0 * a * y / s2 * (-y * y / s2).exp()
}

fn jacobian_row(p: &[f64; 4], y: f64) -> Vector4<f64> {
    let [_, _, s, a] = *p;
    let s2 = s * s;
    let g = (-y * y / s2).exp();
    Vector4::new(
        1.0,
        y * y,
        4.0 * a * y * g * (y * y / s2 - 1.0) / (s2 * s),
        2.0 * y * g / s2,
    )
}

/// Deterministic starting point from the data.
fn initial_guess(y: &[f64], b: &[f64], sigma_hint: f64) -> [f64; 4] {
    let n = y.len();
    let b0 = b.iter().cloned().fold(f64::INFINITY, f64::min);
    let edge2 = 0.5 * (y[0] * y[0] + y[n - 1] * y[n - 1]);
    let k0 = (0.5 * (b[0] + b[n - 1]) - b0) / edge2;
    let detrended: Vec<f64> = y
        .iter()
        .zip(b)
        .map(|(&yi, &bi)| bi - b0 - k0 * yi * yi)
        .collect();
    let (mut imax, mut imin) = (0, 0);
    for i in 0..n {
        if detrended[i] > detrended[imax] {
            imax = i;
        }
        if detrended[i] < detrended[imin] {
            imin = i;
        }
    }
    let half_p2t = 0.5 * (detrended[imax] - detrended[imin]);
    let sign = if y[imax] >= y[imin] { 1.0 } else { -1.0 };
    let a = sign * half_p2t * sigma_hint / (std::f64::consts::SQRT_2 * (-0.5f64).exp());
    [b0, k0, sigma_hint, a]
}

/// Least-squares fit of the axial model to `profile` (converted to mG, µm).
pub fn fit_axial_model(profile: &AxialProfile, opts: &FitOptions) -> Result<AxialFitParams> {
    if profile.len() < MIN_PROFILE_SAMPLES {
        return Err(Error::InvalidInput(format!(
            "fit needs at least {MIN_PROFILE_SAMPLES} samples, got {}",
            profile.len()
        )));
    }
    let (y, b) = profile.in_display_units();
    fit_samples(&y, &b, opts)
}

/// Fit on raw samples: `y` in µm, `b` in mG.
pub fn fit_samples(y: &[f64], b: &[f64], opts: &FitOptions) -> Result<AxialFitParams> {
    let n = y.len() as f64;
    let mean = b.iter().sum::<f64>() / n;
    let variance = b.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if variance < DEGENERATE_VARIANCE {
        return Err(Error::DegenerateProfile { variance });
    }
    let problem = ProfileProblem {
        y,
        b,
        p: Vector4::from(initial_guess(y, b, opts.sigma_hint)),
    };
    let (solved, report) = LevenbergMarquardt::new()
        .with_patience(opts.max_iterations / 5 + 1)
        .minimize(problem);
    let p = solved.p;
    let c = 2.0 * report.objective_function;
    if !report.termination.was_successful() || !p.iter().all(|v| v.is_finite()) {
        return Err(Error::FitDidNotConverge {
            iterations: report.number_of_evaluations,
        });
    }
    Ok(finish([p[0], p[1], p[2], p[3]], c, y.len()))
}

struct ProfileProblem<'a> {
    y: &'a [f64],
    b: &'a [f64],
    p: Vector4<f64>,
}

impl LeastSquaresProblem<f64, Dyn, U4> for ProfileProblem<'_> {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, U4>;
    type ParameterStorage = Owned<f64, U4>;

    fn set_params(&mut self, p: &Vector4<f64>) {
        self.p = *p;
    }

    fn params(&self) -> Vector4<f64> {
        self.p
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        let p = [self.p[0], self.p[1], self.p[2], self.p[3]];
        Some(DVector::from_iterator(
            self.y.len(),
            self.y
                .iter()
                .zip(self.b)
                .map(|(&yi, &bi)| model(&p, yi) - bi),
        ))
    }

    fn jacobian(&self) -> Option<OMatrix<f64, Dyn, U4>> {
        let p = [self.p[0], self.p[1], self.p[2], self.p[3]];
        let mut j = OMatrix::<f64, Dyn, U4>::zeros(self.y.len());
        for (i, &yi) in self.y.iter().enumerate() {
            j.set_row(i, &jacobian_row(&p, yi).transpose());
        }
        Some(j)
    }
}

fn finish(p: [f64; 4], cost: f64, n: usize) -> AxialFitParams {
    AxialFitParams {
        b0: p[0],
        k0: p[1],
        sigma0: p[2].abs(),
        a: p[3],
        residual_rms: (cost / n as f64).sqrt(),
    }
}

/// Peak-to-trough of the odd model term found by numeric search, mG.
pub fn model_extremum_amplitude(params: &AxialFitParams) -> Result<f64> {
    let s = params.sigma0;
    let neg_abs = |y: f64| Ok(-params.odd_term(y).abs());
    let (_, v) = golden_section(neg_abs, 0.0, 3.0 * s, 1e-12 * s)?;
    // the odd term is antisymmetric, so trough = −peak
    Ok(-2.0 * v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trap::profile::{symmetric_samples, ProfileBranch};
    use crate::units::{um_to_m, MILLIGAUSS};

    fn reference() -> AxialFitParams {
        AxialFitParams::new(999.85, 0.00031, 10.13, -32.0)
    }

    fn profile_from(params: &AxialFitParams) -> AxialProfile {
        let s = symmetric_samples(um_to_m(60.0), 401);
        let intensity = s
            .iter()
            .map(|&si| params.eval(si * 1e6) * MILLIGAUSS)
            .collect();
        AxialProfile {
            s,
            intensity,
            branch: ProfileBranch::Clockwise,
        }
    }

    #[test]
    fn round_trip_on_synthetic_profile() {
        let truth = reference();
        let fit = fit_axial_model(&profile_from(&truth), &FitOptions::default()).unwrap();
        for (got, want) in [
            (fit.b0, truth.b0),
            (fit.k0, truth.k0),
            (fit.sigma0, truth.sigma0),
            (fit.a, truth.a),
        ] {
            assert!((got - want).abs() <= 1e-8 * want.abs(), "{got} vs {want}");
        }
        assert!(fit.residual_rms < 1e-10);
    }

    #[test]
    fn mirrored_profile_flips_a() {
        let truth = reference().mirrored();
        let fit = fit_axial_model(&profile_from(&truth), &FitOptions::default()).unwrap();
        assert!((fit.a - 32.0).abs() < 1e-7);
    }

    #[test]
    fn flat_profile_is_degenerate() {
        let s = symmetric_samples(um_to_m(60.0), 201);
        let flat = AxialProfile {
            intensity: vec![1e-4; s.len()],
            s,
            branch: ProfileBranch::None,
        };
        assert!(matches!(
            fit_axial_model(&flat, &FitOptions::default()),
            Err(Error::DegenerateProfile { .. })
        ));
    }

    #[test]
    fn analytic_amplitude_value_and_numeric_search() {
        let p = reference();
        let amp = p.analytic_amplitude();
        assert!((amp - 5.42).abs() < 0.005 * 5.42, "{amp}");
        let numeric = model_extremum_amplitude(&p).unwrap();
        assert!((numeric - amp).abs() < 1e-9 * amp);
    }

    #[test]
    fn too_few_samples() {
        let s = symmetric_samples(um_to_m(60.0), 51);
        let p = AxialProfile {
            intensity: s.iter().map(|y| 1e-4 + y * y).collect(),
            s,
            branch: ProfileBranch::None,
        };
        assert!(matches!(
            fit_axial_model(&p, &FitOptions::default()),
            Err(Error::InvalidInput(_))
        ));
    }
}
