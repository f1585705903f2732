use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::SourceAssembly;
use crate::exec::{self, Execution};
use crate::units::{m_to_um, sig9, tesla_to_mg};
use crate::{Error, Result, Vec3};

/// Regular grid: `origin + i·spacing[0]·axes[0] + j·spacing[1]·axes[1] + k·spacing[2]·axes[2]`.
///
/// Axes must be orthonormal. Axes with a single node are allowed (lines,
/// planes) as long as the grid has at least two nodes in total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    origin: Vec3,
    axes: [Vec3; 3],
    spacing: [f64; 3],
    counts: [usize; 3],
}

impl GridSpec {
    pub fn new(
        origin: Vec3,
        axes: [Vec3; 3],
        spacing: [f64; 3],
        counts: [usize; 3],
    ) -> Result<Self> {
        if !origin.is_finite() {
            return Err(Error::InvalidGeometry("non-finite grid origin".into()));
        }
        for i in 0..3 {
            if !(spacing[i] > 0.0 && spacing[i].is_finite()) {
                return Err(Error::InvalidGeometry(format!(
                    "grid spacing {} must be > 0",
                    spacing[i]
                )));
            }
            if counts[i] == 0 {
                return Err(Error::InvalidGeometry("grid axis with zero nodes".into()));
            }
            for j in 0..3 {
                let expected = if i == j { 1.0 } else { 0.0 };
                if (axes[i].dot(axes[j]) - expected).abs() > 1e-12 {
                    return Err(Error::InvalidGeometry(
                        "grid axes must be orthonormal".into(),
                    ));
                }
            }
        }
        if counts.iter().product::<usize>() < 2 {
            return Err(Error::InvalidGeometry(
                "grid needs at least two nodes".into(),
            ));
        }
        Ok(GridSpec {
            origin,
            axes,
            spacing,
            counts,
        })
    }

    /// Axis-aligned box grid centred on `center`.
    pub fn centered(center: Vec3, half_widths: [f64; 3], counts: [usize; 3]) -> Result<Self> {
        let axes = [Vec3::X, Vec3::Y, Vec3::Z];
        let mut origin = center;
        let mut spacing = [1.0; 3];
        for i in 0..3 {
            if counts[i] > 1 {
                spacing[i] = 2.0 * half_widths[i] / (counts[i] - 1) as f64;
                origin = origin - axes[i] * half_widths[i];
            }
        }
        GridSpec::new(origin, axes, spacing, counts)
    }

    /// Horizontal (x–y) plane through `center`.
    pub fn horizontal_plane(center: Vec3, half_width: f64, nodes: usize) -> Result<Self> {
        GridSpec::centered(center, [half_width, half_width, 0.0], [nodes, nodes, 1])
    }

    /// Line of `nodes` points through `center` along unit `direction`.
    pub fn line(center: Vec3, direction: Vec3, half_length: f64, nodes: usize) -> Result<Self> {
        let d = direction
            .normalized()
            .ok_or_else(|| Error::InvalidGeometry("zero line direction".into()))?;
        let (e1, e2) = perpendicular_pair(d);
        let spacing = 2.0 * half_length / (nodes.max(2) - 1) as f64;
        GridSpec::new(
            center - d * half_length,
            [d, e1, e2],
            [spacing, 1.0, 1.0],
            [nodes, 1, 1],
        )
    }

    pub fn counts(&self) -> [usize; 3] {
        self.counts
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn axes(&self) -> [Vec3; 3] {
        self.axes
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major flat index: first axis varies slowest.
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.counts[1] + j) * self.counts[2] + k
    }

    pub fn node(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.origin
            + self.axes[0] * (i as f64 * self.spacing[0])
            + self.axes[1] * (j as f64 * self.spacing[1])
            + self.axes[2] * (k as f64 * self.spacing[2])
    }

    pub fn node_at(&self, flat: usize) -> Vec3 {
        let k = flat % self.counts[2];
        let j = (flat / self.counts[2]) % self.counts[1];
        let i = flat / (self.counts[1] * self.counts[2]);
        self.node(i, j, k)
    }
}

pub(crate) fn perpendicular_pair(d: Vec3) -> (Vec3, Vec3) {
    let trial = if d.x.abs() < 0.9 { Vec3::X } else { Vec3::Y };
    let e1 = (trial - d * trial.dot(d))
        .normalized()
        .expect("non-parallel trial vector");
    (e1, d.cross(e1))
}

/// Field values and intensities on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldMap {
    pub grid: GridSpec,
    pub field: Vec<Vec3>,
    pub intensity: Vec<f64>,
}

fn central4(f: impl Fn(isize) -> f64, h: f64) -> f64 {
    (8.0 * (f(1) - f(-1)) - (f(2) - f(-2))) / (12.0 * h)
}

/// `max |∇·B| · h / max|B|` over the nodes of any grid, with the divergence
/// at each node taken from a fourth-order central stencil of step `h` built
/// directly on the assembly. Works for lines and planes too.
pub fn divergence_probe(
    assembly: &SourceAssembly,
    grid: &GridSpec,
    h: f64,
    exec: Execution,
) -> Result<f64> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidInput(format!("probe step {h} must be > 0")));
    }
    let per_node = exec::map_range(exec, grid.len(), |flat| -> Result<(f64, f64)> {
        let p = grid.node_at(flat);
        let mut div = 0.0;
        for axis in [Vec3::X, Vec3::Y, Vec3::Z] {
            let comp = |o: isize| -> Result<f64> {
                Ok(axis.dot(assembly.total_field(p + axis * (o as f64 * h))?))
            };
            let v = [comp(-2)?, comp(-1)?, comp(1)?, comp(2)?];
            div += central4(
                |o| {
                    v[match o {
                        -2 => 0,
                        -1 => 1,
                        1 => 2,
                        _ => 3,
                    }]
                },
                h,
            );
        }
        Ok((div.abs(), assembly.intensity(p)?))
    });
    let mut worst = 0.0_f64;
    let mut bmax = 0.0_f64;
    for r in per_node {
        let (d, b) = r?;
        worst = worst.max(d);
        bmax = bmax.max(b);
    }
    Ok(if bmax == 0.0 { 0.0 } else { worst * h / bmax })
}

/// Evaluate the assembly at every grid node.
pub fn field_grid(assembly: &SourceAssembly, grid: &GridSpec, exec: Execution) -> Result<FieldMap> {
    let values = exec::map_range(exec, grid.len(), |flat| {
        let p = grid.node_at(flat);
        assembly.total_field(p).map_err(|e| e.at_node(p))
    });
    let field = values.into_iter().collect::<Result<Vec<_>>>()?;
    let intensity = field.iter().map(|b| b.norm()).collect();
    Ok(FieldMap {
        grid: grid.clone(),
        field,
        intensity,
    })
}

impl FieldMap {
    pub fn max_intensity(&self) -> f64 {
        self.intensity.iter().cloned().fold(0.0, f64::max)
    }

    /// Node of smallest |B|.
    pub fn argmin(&self) -> (usize, Vec3) {
        let (i, _) = self
            .intensity
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty map");
        (i, self.grid.node_at(i))
    }

    /// Largest `|∇·B| · h / max|B|` over interior nodes of a 3D grid (every
    /// axis with at least three nodes; `h` the largest spacing). Uses
    /// fourth-order central differences when every axis has five or more
    /// nodes, second-order otherwise. `None` for lines and planes; use
    /// [`divergence_probe`] there.
    pub fn divergence_metric(&self) -> Option<f64> {
        let counts = self.grid.counts;
        if counts.iter().any(|&n| n < 3) {
            return None;
        }
        let margin = if counts.iter().all(|&n| n >= 5) { 2 } else { 1 };
        let h = self.grid.spacing.iter().cloned().fold(0.0, f64::max);
        let bmax = self.max_intensity();
        if bmax == 0.0 {
            return Some(0.0);
        }
        let at = |idx: [usize; 3], a: usize, off: isize| {
            let mut q = idx;
            q[a] = (q[a] as isize + off) as usize;
            self.grid.axes[a].dot(self.field[self.grid.index(q[0], q[1], q[2])])
        };
        let mut worst = 0.0_f64;
        for i in margin..counts[0] - margin {
            for j in margin..counts[1] - margin {
                for k in margin..counts[2] - margin {
                    let idx = [i, j, k];
                    let mut div = 0.0;
                    for a in 0..3 {
                        let d = self.grid.spacing[a];
                        div += if margin == 2 {
                            central4(|o| at(idx, a, o), d)
                        } else {
                            (at(idx, a, 1) - at(idx, a, -1)) / (2.0 * d)
                        };
                    }
                    worst = worst.max(div.abs());
                }
            }
        }
        Some(worst * h / bmax)
    }

    /// CSV with header `x_um,y_um,z_um,Bx_mG,By_mG,Bz_mG,Bmag_mG`, row-major.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.field.len() * 120);
        out.push_str("x_um,y_um,z_um,Bx_mG,By_mG,Bz_mG,Bmag_mG\n");
        for (flat, (b, mag)) in self.field.iter().zip(&self.intensity).enumerate() {
            let p = self.grid.node_at(flat);
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                sig9(m_to_um(p.x)),
                sig9(m_to_um(p.y)),
                sig9(m_to_um(p.z)),
                sig9(tesla_to_mg(b.x)),
                sig9(tesla_to_mg(b.y)),
                sig9(tesla_to_mg(b.z)),
                sig9(tesla_to_mg(*mag)),
            );
        }
        out
    }
}
