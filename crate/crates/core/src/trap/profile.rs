use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::exec::{self, Execution};
use crate::fluxloop::Branch;
use crate::magnetostatics::SourceAssembly;
use crate::units::{m_to_um, sig9, tesla_to_mg};
use crate::{Error, Result, Vec3};

/// Minimum number of samples in an axial profile.
pub const MIN_PROFILE_SAMPLES: usize = 101;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileBranch {
    Clockwise,
    Anticlockwise,
    None,
}

impl ProfileBranch {
    pub fn label(self) -> &'static str {
        match self {
            ProfileBranch::Clockwise => "clockwise",
            ProfileBranch::Anticlockwise => "anticlockwise",
            ProfileBranch::None => "none",
        }
    }
}

impl From<Option<Branch>> for ProfileBranch {
    fn from(b: Option<Branch>) -> Self {
        match b {
            Some(Branch::Clockwise) => ProfileBranch::Clockwise,
            Some(Branch::Anticlockwise) => ProfileBranch::Anticlockwise,
            None => ProfileBranch::None,
        }
    }
}

/// Straight line `origin + s·direction` along which profiles are sampled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxialLine {
    pub origin: Vec3,
    pub direction: Vec3,
}

impl AxialLine {
    pub fn new(origin: Vec3, direction: Vec3) -> Result<Self> {
        let direction = direction
            .normalized()
            .ok_or_else(|| Error::InvalidGeometry("zero profile direction".into()))?;
        Ok(AxialLine { origin, direction })
    }

    pub fn point(&self, s: f64) -> Vec3 {
        self.origin + self.direction * s
    }
}

/// |B| sampled along an axial line. `s` is the signed coordinate along the
/// line (m); `intensity` is in T.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxialProfile {
    pub s: Vec<f64>,
    pub intensity: Vec<f64>,
    pub branch: ProfileBranch,
}

/// Sample coordinates `−w … w`, exactly antisymmetric about the centre.
pub fn symmetric_samples(half_window: f64, samples: usize) -> Vec<f64> {
    let n1 = (samples - 1) as f64;
    (0..samples)
        .map(|i| half_window * (2.0 * i as f64 - n1) / n1)
        .collect()
}

pub fn axial_profile(
    assembly: &SourceAssembly,
    line: &AxialLine,
    half_window: f64,
    samples: usize,
    branch: ProfileBranch,
    exec: Execution,
) -> Result<AxialProfile> {
    if samples < MIN_PROFILE_SAMPLES {
        return Err(Error::InvalidInput(format!(
            "axial profile needs at least {MIN_PROFILE_SAMPLES} samples, got {samples}"
        )));
    }
    if !(half_window > 0.0 && half_window.is_finite()) {
        return Err(Error::InvalidInput("profile window must be > 0".into()));
    }
    let s = symmetric_samples(half_window, samples);
    let intensity = exec::map(exec, &s, |&si| {
        let p = line.point(si);
        assembly.intensity(p).map_err(|e| e.at_node(p))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(AxialProfile {
        s,
        intensity,
        branch,
    })
}

impl AxialProfile {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// Pointwise difference `self − other` on the same samples.
    pub fn minus(&self, other: &AxialProfile) -> Result<AxialProfile> {
        if self.s != other.s {
            return Err(Error::InvalidInput("profiles sampled differently".into()));
        }
        Ok(AxialProfile {
            s: self.s.clone(),
            intensity: self
                .intensity
                .iter()
                .zip(&other.intensity)
                .map(|(a, b)| a - b)
                .collect(),
            branch: self.branch,
        })
    }

    /// Coordinates in µm and intensity in mG.
    pub fn in_display_units(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.s.iter().map(|&s| m_to_um(s)).collect(),
            self.intensity.iter().map(|&b| tesla_to_mg(b)).collect(),
        )
    }

    /// CSV rows `y_um,Bmag_mG,branch` (header included).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("y_um,Bmag_mG,branch\n");
        self.append_csv_rows(&mut out);
        out
    }

    pub fn append_csv_rows(&self, out: &mut String) {
        for (s, b) in self.s.iter().zip(&self.intensity) {
            let _ = writeln!(
                out,
                "{},{},{}",
                sig9(m_to_um(*s)),
                sig9(tesla_to_mg(*b)),
                self.branch.label()
            );
        }
    }
}

/// Interior local extrema refined by a parabola through the three samples
/// around each; returns (maxima, minima) values.
pub fn local_extrema(values: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut maxima = Vec::new();
    let mut minima = Vec::new();
    for i in 1..values.len().saturating_sub(1) {
        let (l, c, r) = (values[i - 1], values[i], values[i + 1]);
        let is_max = c > l && c >= r;
        let is_min = c < l && c <= r;
        if !(is_max || is_min) {
            continue;
        }
        let curv = l - 2.0 * c + r;
        let refined = if curv != 0.0 {
            c - (r - l) * (r - l) / (8.0 * curv)
        } else {
            c
        };
        if is_max {
            maxima.push(refined);
        } else {
            minima.push(refined);
        }
    }
    (maxima, minima)
}

/// Largest local maximum minus smallest local minimum, mG.
pub fn perturbation_amplitude(profile: &AxialProfile) -> Result<f64> {
    let (maxima, minima) = local_extrema(&profile.intensity);
    if maxima.is_empty() || minima.is_empty() {
        return Err(Error::NoLocalExtrema);
    }
    let hi = maxima.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = minima.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(tesla_to_mg(hi - lo))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::MILLIGAUSS;

    fn synthetic(f: impl Fn(f64) -> f64) -> AxialProfile {
        let s = symmetric_samples(60e-6, 601);
        let intensity = s.iter().map(|&y| f(y)).collect();
        AxialProfile {
            s,
            intensity,
            branch: ProfileBranch::Clockwise,
        }
    }

    #[test]
    fn samples_are_antisymmetric() {
        let s = symmetric_samples(60e-6, 601);
        for i in 0..601 {
            assert_eq!(s[i], -s[600 - i]);
        }
        assert_eq!(s[300], 0.0);
    }

    #[test]
    fn harmonic_profile_has_no_extrema_pair() {
        let p = synthetic(|y| 1e-4 + 6e-5 * y * y);
        assert_eq!(perturbation_amplitude(&p), Err(Error::NoLocalExtrema));
    }

    #[test]
    fn odd_gaussian_amplitude_matches_closed_form() {
        let (a, sigma) = (-32.0e-6 * MILLIGAUSS, 10.13e-6);
        let p = synthetic(|y| {
            1e-4 + 2.0 * a * y / (sigma * sigma) * (-(y * y) / (sigma * sigma)).exp()
        });
        let amp = perturbation_amplitude(&p).unwrap();
        let expected = 2.0 * 2f64.sqrt() * (-0.5f64).exp() * 32.0 / 10.13;
        assert!((amp - expected).abs() < 1e-4 * expected, "{amp} {expected}");
    }
}
