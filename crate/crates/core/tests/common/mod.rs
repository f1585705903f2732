use fluxbec::constants::HBAR;
use fluxbec::dynamics::{Grid1D, Wavefunction1D};
use num_complex::Complex64;

/// Lowest eigenpair of the three-point finite-difference Hamiltonian with
/// hard walls: Sturm-count bisection for the eigenvalue, then inverse
/// iteration (Thomas solves) for the vector.
pub fn fd_ground_state(grid: &Grid1D, v: &[f64], mass: f64) -> (f64, Vec<f64>) {
    let n = v.len();
    let h = grid.spacing();
    let t = HBAR * HBAR / (2.0 * mass * h * h);
    let diag: Vec<f64> = v.iter().map(|x| 2.0 * t + x).collect();
    let off = -t;
    let count_below = |x: f64| {
        let mut c = 0;
        let mut d = diag[0] - x;
        if d < 0.0 {
            c += 1;
        }
        for &di in &diag[1..] {
            let dd = if d == 0.0 { f64::MIN_POSITIVE } else { d };
            d = di - x - off * off / dd;
            if d < 0.0 {
                c += 1;
            }
        }
        c
    };
    let (mut lo, mut hi) = (
        v.iter().cloned().fold(f64::INFINITY, f64::min),
        diag.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 2.0 * t,
    );
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if count_below(mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let e0 = 0.5 * (lo + hi);
    let shift = e0 - 1e-9 * e0.abs();
    let mut x = vec![1.0; n];
    for _ in 0..20 {
        // Thomas algorithm on (H − shift) y = x
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let b0 = diag[0] - shift;
        c[0] = off / b0;
        d[0] = x[0] / b0;
        for i in 1..n {
            let m = diag[i] - shift - off * c[i - 1];
            c[i] = off / m;
            d[i] = (x[i] - off * d[i - 1]) / m;
        }
        let mut y = vec![0.0; n];
        y[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            y[i] = d[i] - c[i] * y[i + 1];
        }
        let norm = (y.iter().map(|a| a * a).sum::<f64>() * h).sqrt();
        x = y.into_iter().map(|a| a / norm).collect();
    }
    (e0, x)
}

pub fn overlap_with_real(psi: &Wavefunction1D, phi: &[f64]) -> f64 {
    let h = psi.grid.spacing();
    let s: Complex64 = psi
        .amplitudes
        .iter()
        .zip(phi)
        .map(|(a, b)| a.conj() * *b)
        .sum();
    (s * h).norm_sqr()
}
