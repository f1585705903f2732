//! Complete elliptic integrals by the arithmetic–geometric mean.
//!
//! Parameter convention: `m = k²`, so `K(m) = ∫₀^{π/2} (1 − m sin²θ)^{-1/2} dθ`.

use std::f64::consts::FRAC_PI_2;

use crate::{Error, Result};

const AGM_TOLERANCE: f64 = 1e-14;
const AGM_MAX_ITER: usize = 64;

/// `K(m)`, `E(m)` and `K(m) − E(m)`; the difference is accumulated directly
/// so it stays accurate for small `m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompleteElliptic {
    pub k: f64,
    pub e: f64,
    pub k_minus_e: f64,
}

pub fn complete_elliptic(m: f64) -> Result<CompleteElliptic> {
    if !(0.0..1.0).contains(&m) {
        return Err(Error::EllipticConvergenceFailure { m });
    }
    let mut a = 1.0_f64;
    let mut b = (1.0 - m).sqrt();
    // sum of 2^(n-1) c_n^2, c_0^2 = m
    let mut sum = 0.5 * m;
    let mut weight = 0.5;
    for _ in 0..AGM_MAX_ITER {
        let c = 0.5 * (a - b);
        weight *= 2.0;
        sum += weight * c * c;
        let a_next = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = a_next;
        if c.abs() <= AGM_TOLERANCE * a {
            let k = FRAC_PI_2 / a;
            let k_minus_e = k * sum;
            return Ok(CompleteElliptic {
                k,
                e: k - k_minus_e,
                k_minus_e,
            });
        }
    }
    Err(Error::EllipticConvergenceFailure { m })
}

// Maclaurin coefficients k_n of K(m)/(π/2).
fn k_series(n_terms: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_terms);
    let mut c = 1.0_f64;
    out.push(1.0);
    for n in 1..n_terms {
        c *= (2 * n - 1) as f64 / (2 * n) as f64;
        out.push(c * c);
    }
    out
}

const SERIES_TERMS: usize = 48;
const SERIES_CUTOFF: f64 = 0.1;

/// `Q(m) = (1 − m)(E − K) + (m/2) E`, which is `O(m²)`.
///
/// This combination appears in the radial field of a current loop and loses
/// all significance near the axis when formed from `K` and `E` directly, so
/// small `m` uses the power series `Q = (π/2) m² Σ q_n m^(n-2)`.
pub fn loop_radial_bracket(m: f64) -> Result<f64> {
    if m < SERIES_CUTOFF {
        Ok(bracket_series(m))
    } else {
        let ell = complete_elliptic(m)?;
        Ok(-(1.0 - m) * ell.k_minus_e + 0.5 * m * ell.e)
    }
}

fn bracket_series(m: f64) -> f64 {
    let k = k_series(SERIES_TERMS);
    let e: Vec<f64> = k
        .iter()
        .enumerate()
        .map(|(n, &kn)| {
            if n == 0 {
                1.0
            } else {
                -kn / (2 * n - 1) as f64
            }
        })
        .collect();
    let mut acc = 0.0;
    let mut pow = 1.0;
    for n in 2..SERIES_TERMS {
        let q = (e[n] - k[n]) - (e[n - 1] - k[n - 1]) + 0.5 * e[n - 1];
        acc += q * pow;
        pow *= m;
        if pow < 1e-20 * acc.abs().max(1e-300) {
            break;
        }
    }
    FRAC_PI_2 * m * m * acc
}

#[cfg(test)]
mod tests {
    use super::*;

    // Midpoint-rule quadrature of the defining integrals, independent of AGM.
    fn quad_ke(m: f64) -> (f64, f64) {
        let n = 200_000;
        let h = FRAC_PI_2 / n as f64;
        let (mut k, mut e) = (0.0, 0.0);
        for i in 0..n {
            let s = ((i as f64 + 0.5) * h).sin();
            let d = 1.0 - m * s * s;
            k += h / d.sqrt();
            e += h * d.sqrt();
        }
        (k, e)
    }

    #[test]
    fn agm_matches_quadrature() {
        for &m in &[0.0, 1e-6, 0.1, 0.5, 0.9, 0.99] {
            let ell = complete_elliptic(m).unwrap();
            let (k, e) = quad_ke(m);
            assert!((ell.k - k).abs() < 1e-9 * k, "K({m})");
            assert!((ell.e - e).abs() < 1e-9 * e, "E({m})");
            assert!((ell.k - ell.e - ell.k_minus_e).abs() < 1e-14 * ell.k);
        }
        let ell = complete_elliptic(0.0).unwrap();
        assert_eq!(ell.k, FRAC_PI_2);
        assert_eq!(ell.k_minus_e, 0.0);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(complete_elliptic(1.0).is_err());
        assert!(complete_elliptic(-0.1).is_err());
    }

    #[test]
    fn bracket_series_and_direct_agree_at_cutoff() {
        let m = SERIES_CUTOFF;
        let series = bracket_series(m);
        let ell = complete_elliptic(m).unwrap();
        let direct = -(1.0 - m) * ell.k_minus_e + 0.5 * m * ell.e;
        assert!(
            (series - direct).abs() < 1e-12 * direct.abs(),
            "{series} {direct}"
        );
        // leading coefficient 3/16
        let tiny = 1e-8;
        let q = loop_radial_bracket(tiny).unwrap();
        assert!((q / (FRAC_PI_2 * tiny * tiny) - 0.1875).abs() < 1e-7);
    }
}
