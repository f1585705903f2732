//! Derivative-free simplex descent and finite-difference Newton polish for
//! smooth scalar fields of position.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use crate::{Error, Result, Vec3};

/// Scalar field of position; errors propagate from field evaluation.
pub trait ScalarField: Sync {
    fn value(&self, p: Vec3) -> Result<f64>;
}

impl<F> ScalarField for F
where
    F: Fn(Vec3) -> Result<f64> + Sync,
{
    fn value(&self, p: Vec3) -> Result<f64> {
        self(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizeOptions {
    /// Initial simplex edge, m.
    pub initial_step: f64,
    /// Simplex diameter at which descent stops, m.
    pub simplex_tolerance: f64,
    /// Gradient norm accepted at the minimum, field units per m.
    pub gradient_tolerance: f64,
    /// Cap on simplex iterations plus Newton steps.
    pub max_iterations: usize,
    /// Finite-difference step for gradient and Hessian, m.
    pub fd_step: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            initial_step: 50e-6,
            simplex_tolerance: 1e-11,
            gradient_tolerance: 1e-8,
            max_iterations: 10_000,
            fd_step: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimumReport {
    pub point: Vec3,
    pub value: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    /// Hessian eigenvalues at the result, ascending.
    pub curvatures: [f64; 3],
}

/// Central-difference gradient, Richardson-extrapolated from steps `h` and `h/2`.
pub fn gradient(f: &dyn ScalarField, p: Vec3, h: f64) -> Result<Vec3> {
    let mut g = [0.0; 3];
    for (i, gi) in g.iter_mut().enumerate() {
        *gi = derivative_along(f, p, unit(i), h)?;
    }
    Ok(Vec3::from_array(g))
}

/// Richardson-extrapolated directional derivative along unit vector `e`.
pub fn derivative_along(f: &dyn ScalarField, p: Vec3, e: Vec3, h: f64) -> Result<f64> {
    let central =
        |h: f64| -> Result<f64> { Ok((f.value(p + e * h)? - f.value(p - e * h)?) / (2.0 * h)) };
    Ok((4.0 * central(0.5 * h)? - central(h)?) / 3.0)
}

/// Central-difference Hessian with step `h`.
pub fn hessian(f: &dyn ScalarField, p: Vec3, h: f64) -> Result<Matrix3<f64>> {
    hessian_in_frame(f, p, [Vec3::X, Vec3::Y, Vec3::Z], [h; 3])
}

/// Central-difference Hessian in the orthonormal `frame`, with a separate
/// step along each frame axis. Entries are with respect to frame coordinates.
pub fn hessian_in_frame(
    f: &dyn ScalarField,
    p: Vec3,
    frame: [Vec3; 3],
    steps: [f64; 3],
) -> Result<Matrix3<f64>> {
    let f0 = f.value(p)?;
    let mut m = Matrix3::zeros();
    for i in 0..3 {
        let hi = steps[i];
        let ei = frame[i] * hi;
        m[(i, i)] = (f.value(p + ei)? - 2.0 * f0 + f.value(p - ei)?) / (hi * hi);
        for j in (i + 1)..3 {
            let hj = steps[j];
            let ej = frame[j] * hj;
            let v = (f.value(p + ei + ej)? - f.value(p + ei - ej)? - f.value(p - ei + ej)?
                + f.value(p - ei - ej)?)
                / (4.0 * hi * hj);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

/// Richardson-extrapolated Hessian from steps `h` and `h/2`.
pub fn hessian_richardson(f: &dyn ScalarField, p: Vec3, h: f64) -> Result<Matrix3<f64>> {
    let coarse = hessian(f, p, h)?;
    let fine = hessian(f, p, 0.5 * h)?;
    Ok((fine * 4.0 - coarse) / 3.0)
}

/// Eigen-decomposition of the Hessian at `p` for strongly anisotropic wells.
///
/// A first lab-frame pass with step `h` finds the eigen-axes. The Hessian is
/// then re-estimated in that frame with the step along each axis stretched by
/// `sqrt(λ_max/λ_i)` (at most 64×), so soft directions are not swamped by
/// round-off, and Richardson-extrapolated from steps `s` and `s/2`.
pub fn hessian_eigen_adaptive(
    f: &dyn ScalarField,
    p: Vec3,
    h: f64,
) -> Result<([f64; 3], [Vec3; 3])> {
    let (vals, frame) = sorted_eigen(&hessian(f, p, h)?);
    let vmax = vals[2].abs().max(f64::MIN_POSITIVE);
    let steps = vals.map(|v| {
        let stretch = if v > 0.0 {
            (vmax / v).sqrt().clamp(1.0, 64.0)
        } else {
            1.0
        };
        h * stretch
    });
    let coarse = hessian_in_frame(f, p, frame, steps)?;
    let fine = hessian_in_frame(f, p, frame, steps.map(|s| 0.5 * s))?;
    let local = (fine * 4.0 - coarse) / 3.0;
    let (lv, lvecs) = sorted_eigen(&local);
    let vecs = lvecs.map(|v| frame[0] * v.x + frame[1] * v.y + frame[2] * v.z);
    Ok((lv, vecs))
}

/// Eigenvalues ascending with matching unit eigenvectors.
pub fn sorted_eigen(h: &Matrix3<f64>) -> ([f64; 3], [Vec3; 3]) {
    let eig = SymmetricEigen::new(*h);
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = idx.map(|i| eig.eigenvalues[i]);
    let vecs = idx.map(|i| {
        let c = eig.eigenvectors.column(i);
        Vec3::new(c[0], c[1], c[2])
    });
    (vals, vecs)
}

fn unit(i: usize) -> Vec3 {
    match i {
        0 => Vec3::X,
        1 => Vec3::Y,
        _ => Vec3::Z,
    }
}

struct Simplex {
    points: [Vec3; 4],
    values: [f64; 4],
}

impl Simplex {
    fn new(f: &dyn ScalarField, start: Vec3, step: f64) -> Result<Self> {
        let points = [
            start,
            start + Vec3::X * step,
            start + Vec3::Y * step,
            start + Vec3::Z * step,
        ];
        let mut values = [0.0; 4];
        for (v, p) in values.iter_mut().zip(&points) {
            *v = f.value(*p)?;
        }
        Ok(Simplex { points, values })
    }

    fn sort(&mut self) {
        let mut idx = [0usize, 1, 2, 3];
        idx.sort_by(|&a, &b| self.values[a].total_cmp(&self.values[b]));
        self.points = idx.map(|i| self.points[i]);
        self.values = idx.map(|i| self.values[i]);
    }

    fn diameter(&self) -> f64 {
        let mut d = 0.0_f64;
        for i in 1..4 {
            d = d.max((self.points[i] - self.points[0]).norm());
        }
        d
    }

    /// One Nelder–Mead iteration with standard coefficients.
    fn step(&mut self, f: &dyn ScalarField) -> Result<()> {
        self.sort();
        let centroid = (self.points[0] + self.points[1] + self.points[2]) / 3.0;
        let worst = self.points[3];
        let reflected = centroid + (centroid - worst);
        let fr = f.value(reflected)?;
        if fr < self.values[0] {
            let expanded = centroid + (centroid - worst) * 2.0;
            let fe = f.value(expanded)?;
            if fe < fr {
                self.points[3] = expanded;
                self.values[3] = fe;
            } else {
                self.points[3] = reflected;
                self.values[3] = fr;
            }
            return Ok(());
        }
        if fr < self.values[2] {
            self.points[3] = reflected;
            self.values[3] = fr;
            return Ok(());
        }
        let (contracted, fc) = if fr < self.values[3] {
            let c = centroid + (reflected - centroid) * 0.5;
            (c, f.value(c)?)
        } else {
            let c = centroid + (worst - centroid) * 0.5;
            (c, f.value(c)?)
        };
        if fc < self.values[3].min(fr) {
            self.points[3] = contracted;
            self.values[3] = fc;
            return Ok(());
        }
        let best = self.points[0];
        for i in 1..4 {
            self.points[i] = best + (self.points[i] - best) * 0.5;
            self.values[i] = f.value(self.points[i])?;
        }
        Ok(())
    }
}

/// Simplex descent with restarts, then Newton polish on finite differences.
///
/// Fails with `SaddleDetected` if the Hessian at the result has a negative
/// eigenvalue.
pub fn minimize(f: &dyn ScalarField, guess: Vec3, opts: &MinimizeOptions) -> Result<MinimumReport> {
    let mut iterations = 0;
    let mut start = guess;
    let mut step = opts.initial_step;
    let mut best_value = f.value(start)?;
    for _restart in 0..8 {
        let mut simplex = Simplex::new(f, start, step)?;
        while simplex.diameter() > opts.simplex_tolerance {
            if iterations >= opts.max_iterations {
                let g = gradient(f, simplex.points[0], opts.fd_step)?;
                return Err(Error::MinimizationDidNotConverge {
                    iterations,
                    gradient: g.norm(),
                });
            }
            simplex.step(f)?;
            iterations += 1;
        }
        simplex.sort();
        let improved = simplex.values[0] < best_value;
        let moved = (simplex.points[0] - start).norm();
        start = simplex.points[0];
        best_value = best_value.min(simplex.values[0]);
        if !improved || moved < 10.0 * opts.simplex_tolerance {
            break;
        }
        step = (10.0 * moved)
            .min(opts.initial_step)
            .max(100.0 * opts.simplex_tolerance);
    }

    let mut p = start;
    let mut g = gradient(f, p, opts.fd_step)?;
    for _ in 0..50 {
        if iterations >= opts.max_iterations {
            break;
        }
        iterations += 1;
        let h = hessian(f, p, opts.fd_step)?;
        let Some(inv) = h.try_inverse() else { break };
        let dp = inv * Vector3::new(g.x, g.y, g.z);
        let candidate = p - Vec3::new(dp[0], dp[1], dp[2]);
        let gc = gradient(f, candidate, opts.fd_step)?;
        if gc.norm() >= g.norm() {
            break;
        }
        p = candidate;
        g = gc;
        if dp.norm() < 1e-13 {
            break;
        }
    }
    if g.norm() >= opts.gradient_tolerance {
        return Err(Error::MinimizationDidNotConverge {
            iterations,
            gradient: g.norm(),
        });
    }
    let curvatures = check_minimum(f, p, opts.fd_step)?;
    Ok(MinimumReport {
        point: p,
        value: f.value(p)?,
        gradient_norm: g.norm(),
        iterations,
        curvatures,
    })
}

/// Hessian eigenvalues at `p` (ascending); `SaddleDetected` if any is negative.
pub fn check_minimum(f: &dyn ScalarField, p: Vec3, h: f64) -> Result<[f64; 3]> {
    let (curvatures, _) = sorted_eigen(&hessian(f, p, h)?);
    if curvatures[0] < 0.0 {
        return Err(Error::SaddleDetected {
            eigenvalue: curvatures[0],
        });
    }
    Ok(curvatures)
}

/// Golden-section minimisation of a 1D function on `[lo, hi]`.
pub fn golden_section<F>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - r * (hi - lo);
    let mut d = lo + r * (hi - lo);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (hi - lo).abs() > tol {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - r * (hi - lo);
            fc = f(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + r * (hi - lo);
            fd = f(d)?;
        }
    }
    let x = 0.5 * (lo + hi);
    Ok((x, f(x)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bowl(r0: Vec3) -> impl Fn(Vec3) -> Result<f64> + Sync {
        move |p: Vec3| {
            let d = p - r0;
            Ok(1e-4 + 0.2 * d.x * d.x + 6e-5 * d.y * d.y + 0.15 * d.z * d.z)
        }
    }

    #[test]
    fn finds_constructed_minimum() {
        let r0 = Vec3::new(3e-6, -2e-6, 498e-6);
        let f = bowl(r0);
        let rep = minimize(&f, Vec3::new(0.0, 0.0, 500e-6), &MinimizeOptions::default()).unwrap();
        assert!((rep.point - r0).norm() < 1e-9, "{:?}", rep.point - r0);
        assert!(rep.gradient_norm < 1e-8);
    }

    #[test]
    fn basin_from_displaced_guess() {
        let r0 = Vec3::new(0.0, 0.0, 500e-6);
        let f = bowl(r0);
        let a = minimize(
            &f,
            r0 + Vec3::new(50e-6, 0.0, 0.0),
            &MinimizeOptions::default(),
        )
        .unwrap();
        let b = minimize(
            &f,
            r0 + Vec3::new(0.0, 35e-6, -35e-6),
            &MinimizeOptions::default(),
        )
        .unwrap();
        assert!((a.point - b.point).norm() < 1e-9);
    }

    #[test]
    fn saddle_is_reported() {
        let f = |p: Vec3| Ok(p.x * p.x + p.y * p.y - p.z * p.z);
        let opts = MinimizeOptions {
            max_iterations: 200,
            ..Default::default()
        };
        assert!(minimize(&f, Vec3::new(1e-6, 0.0, 1e-6), &opts).is_err());
        let err = check_minimum(&f, Vec3::ZERO, 1e-3).unwrap_err();
        assert!(
            matches!(err, Error::SaddleDetected { eigenvalue } if (eigenvalue + 2.0).abs() < 1e-9)
        );
    }

    #[test]
    fn hessian_of_quadratic_is_exact() {
        let f = |p: Vec3| Ok(2.0 * p.x * p.x + 3.0 * p.x * p.y + 0.5 * p.z * p.z);
        let h = hessian_richardson(&f, Vec3::new(1e-3, 2e-3, -1e-3), 1e-4).unwrap();
        assert!((h[(0, 0)] - 4.0).abs() < 1e-6);
        assert!((h[(0, 1)] - 3.0).abs() < 1e-6);
        assert!((h[(2, 2)] - 1.0).abs() < 1e-6);
        assert!(h[(1, 2)].abs() < 1e-6);
    }

    #[test]
    fn golden_section_finds_parabola_vertex() {
        let (x, _) = golden_section(|x| Ok((x - 0.3) * (x - 0.3)), -1.0, 2.0, 1e-10).unwrap();
        assert!((x - 0.3).abs() < 1e-9);
    }
}
