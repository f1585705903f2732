use std::fmt::Write as _;

use num_complex::Complex64;

use super::Grid1D;
use crate::units::{m_to_um, sig9};
use crate::{Error, Result};

/// Tolerance on `∑|ψ|² Δy = 1`.
pub const NORM_TOLERANCE: f64 = 1e-10;
/// Probability allowed in the edge bands before a window is declared too small.
pub const BOUNDARY_TOLERANCE: f64 = 1e-10;

/// Single-particle orbital on a [`Grid1D`]; the atom number is carried
/// alongside for the mean-field term and the phase.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavefunction1D {
    pub grid: Grid1D,
    pub amplitudes: Vec<Complex64>,
    pub atom_number: u64,
}

impl Wavefunction1D {
    /// Normalises `amplitudes`; fails on length mismatch or a zero state.
    pub fn new(grid: Grid1D, amplitudes: Vec<Complex64>, atom_number: u64) -> Result<Self> {
        if amplitudes.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "{} amplitudes for {} grid nodes",
                amplitudes.len(),
                grid.len()
            )));
        }
        if atom_number == 0 {
            return Err(Error::InvalidInput("atom number must be >= 1".into()));
        }
        let mut psi = Wavefunction1D {
            grid,
            amplitudes,
            atom_number,
        };
        let norm = psi.norm_sqr();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidInput(
                "wavefunction has zero or non-finite norm".into(),
            ));
        }
        psi.normalize();
        Ok(psi)
    }

    /// `exp(−(y−c)²/(2w²) + i k y)`, so `|ψ|² ∝ exp(−(y−c)²/w²)`.
    pub fn gaussian(
        grid: Grid1D,
        center: f64,
        width: f64,
        momentum: f64,
        atom_number: u64,
    ) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::InvalidInput("gaussian width must be > 0".into()));
        }
        let amps = grid
            .positions()
            .into_iter()
            .map(|y| {
                let x = (y - center) / width;
                Complex64::from_polar((-0.5 * x * x).exp(), momentum * y)
            })
            .collect();
        Wavefunction1D::new(grid, amps, atom_number)
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.spacing()
    }

    pub fn normalize(&mut self) {
        let s = self.norm_sqr().sqrt().recip();
        for a in &mut self.amplitudes {
            *a *= s;
        }
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() < NORM_TOLERANCE
    }

    /// `|ψ|²`, 1/m.
    pub fn density(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Wavefunction1D) -> Result<Complex64> {
        self.check_same_grid(other)?;
        let dy = self.grid.spacing();
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * dy)
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &Wavefunction1D) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// L² norm of the difference.
    pub fn distance(&self, other: &Wavefunction1D) -> Result<f64> {
        self.check_same_grid(other)?;
        let s: f64 = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        Ok((s * self.grid.spacing()).sqrt())
    }

    /// `ψ(−y)`; exact on a window symmetric about zero.
    pub fn mirrored(&self) -> Wavefunction1D {
        let n = self.len();
        let amplitudes = (0..n).map(|j| self.amplitudes[(n - j) % n]).collect();
        Wavefunction1D {
            amplitudes,
            ..self.clone()
        }
    }

    /// `⟨y⟩`, m.
    pub fn mean_position(&self) -> f64 {
        let dy = self.grid.spacing();
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(j, a)| a.norm_sqr() * self.grid.position(j))
            .sum::<f64>()
            * dy
    }

    /// RMS width of `|ψ|²`, m.
    pub fn rms_width(&self) -> f64 {
        let dy = self.grid.spacing();
        let mean = self.mean_position();
        let var: f64 = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(j, a)| a.norm_sqr() * (self.grid.position(j) - mean).powi(2))
            .sum::<f64>()
            * dy;
        var.sqrt()
    }

    /// Probability within the outer 1/32 of the window on each side.
    pub fn boundary_mass(&self) -> f64 {
        let n = self.len();
        let band = n / 32;
        let dy = self.grid.spacing();
        let edge = |r: std::ops::Range<usize>| -> f64 {
            self.amplitudes[r].iter().map(|a| a.norm_sqr()).sum::<f64>() * dy
        };
        edge(0..band) + edge(n - band..n)
    }

    pub fn check_boundary(&self) -> Result<()> {
        let boundary_mass = self.boundary_mass();
        if boundary_mass > BOUNDARY_TOLERANCE {
            return Err(Error::WindowTooSmall { boundary_mass });
        }
        Ok(())
    }

    /// Snapshot CSV `y_um,re,im,density` with density per µm.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("y_um,re,im,density\n");
        for (j, a) in self.amplitudes.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                sig9(m_to_um(self.grid.position(j))),
                sig9(a.re),
                sig9(a.im),
                sig9(a.norm_sqr() * 1e-6)
            );
        }
        out
    }

    /// Copy onto a larger grid with the same spacing and centre, zero-padded.
    pub fn embedded(&self, grid: Grid1D) -> Result<Wavefunction1D> {
        let n = self.len();
        let m = grid.len();
        let same_spacing =
            (grid.spacing() - self.grid.spacing()).abs() <= 1e-12 * self.grid.spacing();
        let same_centre = (grid.center() - self.grid.center()).abs() <= 1e-9 * self.grid.length();
        if m < n || !same_spacing || !same_centre {
            return Err(Error::InvalidInput(
                "target grid does not contain this window".into(),
            ));
        }
        let offset = (m - n) / 2;
        let mut amplitudes = vec![Complex64::default(); m];
        amplitudes[offset..offset + n].copy_from_slice(&self.amplitudes);
        Ok(Wavefunction1D {
            grid,
            amplitudes,
            atom_number: self.atom_number,
        })
    }

    fn check_same_grid(&self, other: &Wavefunction1D) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::InvalidInput(
                "wavefunctions on different grids".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid1D {
        Grid1D::symmetric(40e-6, 1024).unwrap()
    }

    #[test]
    fn gaussian_moments() {
        let w = 3e-6;
        let psi = Wavefunction1D::gaussian(grid(), 2e-6, w, 0.0, 1).unwrap();
        assert!(psi.is_normalized());
        assert!((psi.mean_position() - 2e-6).abs() < 1e-15);
        assert!((psi.rms_width() - w / 2f64.sqrt()).abs() < 1e-12 * w);
        assert!(psi.boundary_mass() < 1e-30);
        psi.check_boundary().unwrap();
    }

    #[test]
    fn mirror_and_overlap() {
        let a = Wavefunction1D::gaussian(grid(), 5e-6, 3e-6, 1e5, 1).unwrap();
        let m = a.mirrored();
        assert!((m.mean_position() + 5e-6).abs() < 1e-15);
        assert_eq!(m.mirrored(), a);
        assert!((a.fidelity(&a).unwrap() - 1.0).abs() < 1e-14);
        assert!(a.distance(&a).unwrap() == 0.0);
        let b = Wavefunction1D::gaussian(grid(), -5e-6, 3e-6, 0.0, 1).unwrap();
        let c = Wavefunction1D::gaussian(grid(), 5e-6, 3e-6, 0.0, 1).unwrap();
        // real Gaussians of width w a distance d apart overlap as exp(−d²/4w²)
        let expected = (-(10e-6f64).powi(2) / (4.0 * 9e-12)).exp();
        let got = c.inner(&b).unwrap().norm();
        assert!((got - expected).abs() < 1e-12, "{got} {expected}");
    }

    #[test]
    fn invalid_inputs() {
        assert!(Wavefunction1D::new(grid(), vec![Complex64::new(0.0, 0.0); 1024], 1).is_err());
        assert!(Wavefunction1D::new(grid(), vec![Complex64::new(1.0, 0.0); 10], 1).is_err());
        assert!(Wavefunction1D::gaussian(grid(), 0.0, 1e-6, 0.0, 0).is_err());
        let wide = Wavefunction1D::gaussian(grid(), 0.0, 30e-6, 0.0, 1).unwrap();
        assert!(matches!(
            wide.check_boundary(),
            Err(Error::WindowTooSmall { .. })
        ));
    }

    #[test]
    fn snapshot_csv() {
        let psi = Wavefunction1D::gaussian(grid(), 0.0, 3e-6, 0.0, 1).unwrap();
        let csv = psi.to_csv();
        assert!(csv.starts_with("y_um,re,im,density\n"));
        assert_eq!(csv.lines().count(), 1025);
    }
}
