use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Smallest supported number of grid nodes.
pub const MIN_NODES: usize = 256;

/// Uniform periodic grid on `[y_min, y_max)` with `n` nodes, `n` a power of
/// two. Node `j` sits at `centre + (j − n/2)·Δy`, so on a window symmetric
/// about zero node `n − j` is exactly the mirror image of node `j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    y_min: f64,
    y_max: f64,
    n: usize,
}

impl Grid1D {
    pub fn new(y_min: f64, y_max: f64, n: usize) -> Result<Self> {
        if !(y_min.is_finite() && y_max.is_finite() && y_max > y_min) {
            return Err(Error::InvalidInput(format!(
                "grid window [{y_min}, {y_max}] is empty"
            )));
        }
        if n < MIN_NODES || !n.is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "grid size {n} must be a power of two >= {MIN_NODES}"
            )));
        }
        Ok(Grid1D { y_min, y_max, n })
    }

    /// Window `[−half_width, half_width)`.
    pub fn symmetric(half_width: f64, n: usize) -> Result<Self> {
        Grid1D::new(-half_width, half_width, n)
    }

    pub fn y_min(&self) -> f64 {
        self.y_min
    }

    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn length(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn spacing(&self) -> f64 {
        self.length() / self.n as f64
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.y_min + self.y_max)
    }

    pub fn position(&self, j: usize) -> f64 {
        self.center() + (j as f64 - (self.n / 2) as f64) * self.spacing()
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.position(j)).collect()
    }

    /// Angular wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let dk = std::f64::consts::TAU / self.length();
        let n = self.n as isize;
        (0..n)
            .map(|j| if j < n / 2 { j } else { j - n } as f64 * dk)
            .collect()
    }

    /// Same spacing, `factor` times the window about the same centre.
    pub fn enlarged(&self, factor: usize) -> Result<Self> {
        if factor == 0 || !factor.is_power_of_two() {
            return Err(Error::InvalidInput(
                "enlargement must be a power of two".into(),
            ));
        }
        let half = 0.5 * self.length() * factor as f64;
        Grid1D::new(self.center() - half, self.center() + half, self.n * factor)
    }

    /// Same window, twice the nodes.
    pub fn refined(&self) -> Result<Self> {
        Grid1D::new(self.y_min, self.y_max, 2 * self.n)
    }
}
