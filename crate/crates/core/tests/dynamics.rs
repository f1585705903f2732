use std::f64::consts::TAU;

use fluxbec::constants::HBAR;
use fluxbec::dynamics::*;
use fluxbec::fluxloop::Branch;
use fluxbec::trap::{AtomSpecies, AxialFitParams};
use fluxbec::{Error, Execution};

mod common;
use common::{fd_ground_state, overlap_with_real};

const OMEGA: f64 = 10.0 * TAU;

fn rb() -> AtomSpecies {
    AtomSpecies::rb87()
}

fn harmonic(grid: &Grid1D, w: f64) -> Vec<f64> {
    let m = rb().mass;
    grid.positions()
        .iter()
        .map(|y| 0.5 * m * w * w * y * y)
        .collect()
}

fn reference_fit() -> AxialFitParams {
    AxialFitParams::new(999.85, 0.00031, 10.13, -32.0)
}

#[test]
fn imaginary_time_matches_tridiagonal_eigensolver() {
    let sp = rb();
    let grid = Grid1D::symmetric(40e-6, 1024).unwrap();
    let fit = reference_fit();
    let sigma = fit.sigma0 * 1e-6;
    let a = fit_a_si(&fit);
    let base = harmonic(&grid, OMEGA);
    let ys = grid.positions();
    let dip: Vec<f64> = base
        .iter()
        .zip(&ys)
        .map(|(v, y)| {
            v + sp.moment() * 2.0 * a * y / (sigma * sigma) * (-y * y / (sigma * sigma)).exp()
        })
        .collect();
    let cubic: Vec<f64> = base
        .iter()
        .zip(&ys)
        .map(|(v, y)| v + 4e-18 * y * y * y)
        .collect();
    for (name, v, factor) in [
        ("harmonic", &base, 0.01),
        ("dip", &dip, 0.001),
        ("cubic", &cubic, 0.01),
    ] {
        let opts = GroundStateOptions {
            dtau_factor: factor,
            ..GroundStateOptions::new(OMEGA)
        };
        let rep = ground_state_from(&grid, v, &sp, 0.0, 1, None, &opts).unwrap();
        let (e_fd, phi) = fd_ground_state(&grid, v, sp.mass);
        let f = overlap_with_real(&rep.psi, &phi);
        assert!(f > 1.0 - 1e-6, "{name}: overlap {f}");
        assert!(
            (rep.energy - e_fd).abs() < 1e-5 * e_fd.abs() + 1e-3 * HBAR * OMEGA,
            "{name}"
        );
    }
    // the dip ground state sits on the low side of the odd term
    let rep = ground_state(&grid, &dip, &sp, 0.0, 1, &GroundStateOptions::new(OMEGA)).unwrap();
    assert!(rep.mean_position() > 3e-6, "{}", rep.mean_position());
}

#[test]
fn oscillator_energy_and_width() {
    let sp = rb();
    let grid = Grid1D::symmetric(40e-6, 1024).unwrap();
    let v = harmonic(&grid, OMEGA);
    let opts = GroundStateOptions {
        record_trace: true,
        ..GroundStateOptions::new(OMEGA)
    };
    let rep = ground_state_from(&grid, &v, &sp, 0.0, 1, None, &opts).unwrap();
    assert!((rep.energy / (0.5 * HBAR * OMEGA) - 1.0).abs() < 1e-6);
    let l = (HBAR / (sp.mass * OMEGA)).sqrt();
    assert!((rep.psi.rms_width() * 2f64.sqrt() / l - 1.0).abs() < 1e-6);
}

#[test]
fn imaginary_time_energy_is_monotone() {
    let sp = rb();
    let grid = Grid1D::symmetric(60e-6, 1024).unwrap();
    let v = harmonic(&grid, OMEGA);
    let start = Wavefunction1D::gaussian(grid, 8e-6, 1.5e-6, 0.0, 200).unwrap();
    let w_r = 540.0 * TAU;
    let g = g1d(&sp, w_r, w_r).unwrap();
    let opts = GroundStateOptions {
        record_trace: true,
        ..GroundStateOptions::new(OMEGA)
    };
    let rep = ground_state_from(&grid, &v, &sp, g, 200, Some(&start), &opts).unwrap();
    let tol = 1e-13 * HBAR * OMEGA;
    for w in rep.trace.windows(2) {
        assert!(w[1] <= w[0] + tol, "{} -> {}", w[0], w[1]);
    }
    assert!(rep.steps > 100);
}

#[test]
fn thomas_fermi_limit_in_one_dimension() {
    let sp = rb();
    let grid = Grid1D::symmetric(120e-6, 2048).unwrap();
    let v = harmonic(&grid, OMEGA);
    let n = 10_000u64;
    let w_r = 540.0 * TAU;
    let g = g1d(&sp, w_r, w_r).unwrap();
    let opts = GroundStateOptions {
        dtau_factor: 0.002,
        tolerance: 1e-10,
        ..GroundStateOptions::new(OMEGA)
    };
    let psi = ground_state(&grid, &v, &sp, g, n, &opts).unwrap();
    let mu = chemical_potential(&psi, &sp, &v, g).unwrap();
    // ∫(μ − ½mω²y²)/(gN) dy = 1 over the Thomas–Fermi radius
    let gn = g * n as f64;
    let mu_tf = (3.0 * gn * OMEGA * sp.mass.sqrt() / (4.0 * 2f64.sqrt())).powf(2.0 / 3.0);
    assert!((mu / mu_tf - 1.0).abs() < 0.02, "{} vs {}", mu, mu_tf);
    assert!(mu / (HBAR * OMEGA) > 50.0, "{}", mu / (HBAR * OMEGA));
}

#[test]
fn free_expansion_matches_closed_form() {
    let sp = rb();
    let grid = Grid1D::symmetric(100e-6, 2048).unwrap();
    let w0 = 2e-6;
    let psi = Wavefunction1D::gaussian(grid, 0.0, w0, 0.0, 1).unwrap();
    let zero = vec![0.0; grid.len()];
    let (dt, steps) = (1e-4, 160);
    let out = propagate(&psi, &sp, &Static(&zero), dt, steps, 0.0).unwrap();
    let t = dt * steps as f64;
    let tau = HBAR * t / (sp.mass * w0 * w0);
    let expect = w0 * w0 * (1.0 + tau * tau);
    let got = 2.0 * out.rms_width().powi(2);
    assert!((got / expect - 1.0).abs() < 1e-6, "{}", got / expect - 1.0);
}

#[test]
fn coherent_state_oscillates_at_trap_frequency() {
    let sp = rb();
    let grid = Grid1D::symmetric(40e-6, 1024).unwrap();
    let v = harmonic(&grid, OMEGA);
    let l = (HBAR / (sp.mass * OMEGA)).sqrt();
    let y0 = 5e-6;
    let mut psi = Wavefunction1D::gaussian(grid, y0, l, 0.0, 1).unwrap();
    let dt = 1e-5;
    let mut prop = Propagator::new(&grid, &sp, dt, 0.0, 1).unwrap();
    let period_steps = (TAU / OMEGA / dt).round() as usize;
    let mut t = 0.0;
    for k in 1..=2 * period_steps {
        prop.step(&mut psi.amplitudes, &Static(&v), t).unwrap();
        t += dt;
        if k % (period_steps / 8) == 0 {
            let expect = y0 * (OMEGA * t).cos();
            assert!((psi.mean_position() - expect).abs() < 1e-6 * y0, "t = {t}");
            assert!((psi.rms_width() * 2f64.sqrt() / l - 1.0).abs() < 1e-6);
        }
    }
}

#[test]
fn norm_drift_over_many_steps() {
    let sp = rb();
    let grid = Grid1D::symmetric(40e-6, 256).unwrap();
    let v = harmonic(&grid, OMEGA);
    let psi = Wavefunction1D::gaussian(grid, 3e-6, 3e-6, 2e5, 1).unwrap();
    let out = propagate(&psi, &sp, &Static(&v), 2e-5, 100_000, 0.0).unwrap();
    assert!(
        (out.norm_sqr() - 1.0).abs() < 1e-10,
        "{}",
        out.norm_sqr() - 1.0
    );
}

#[test]
fn time_reversal_returns_initial_state() {
    let sp = rb();
    let grid = Grid1D::symmetric(40e-6, 1024).unwrap();
    let v = harmonic(&grid, OMEGA);
    let psi = Wavefunction1D::gaussian(grid, 4e-6, 2e-6, 1e5, 1).unwrap();
    let fwd = propagate(&psi, &sp, &Static(&v), 2e-5, 3000, 0.0).unwrap();
    let back = propagate(&fwd, &sp, &Static(&v), -2e-5, 3000, 0.0).unwrap();
    assert!(back.distance(&psi).unwrap() < 1e-8);
    assert!(fwd.distance(&psi).unwrap() > 0.1);
}

#[test]
fn doubling_resolution_changes_little() {
    let sp = rb();
    let run = |n: usize| {
        let grid = Grid1D::symmetric(40e-6, n).unwrap();
        let v = harmonic(&grid, OMEGA);
        let psi = Wavefunction1D::gaussian(grid, 6e-6, 3e-6, 0.0, 1).unwrap();
        propagate(&psi, &sp, &Static(&v), 2e-5, 2000, 0.0).unwrap()
    };
    let coarse = run(512);
    let fine = run(1024);
    let h = coarse.grid.spacing();
    let diff: f64 = coarse
        .amplitudes
        .iter()
        .enumerate()
        .map(|(j, a)| (a - fine.amplitudes[2 * j]).norm_sqr())
        .sum::<f64>()
        * h;
    assert!(diff.sqrt() < 1e-8, "{}", diff.sqrt());
}

#[test]
fn propagation_rejects_wide_cloud() {
    let sp = rb();
    let grid = Grid1D::symmetric(20e-6, 256).unwrap();
    let zero = vec![0.0; grid.len()];
    let psi = Wavefunction1D::gaussian(grid, 0.0, 1e-6, 0.0, 1).unwrap();
    // free expansion fills the small window within 50 ms
    let r = propagate(&psi, &sp, &Static(&zero), 1e-4, 500, 0.0);
    assert!(matches!(r, Err(Error::WindowTooSmall { .. })));
}

fn initial_state(grid: Grid1D, n: u64) -> Wavefunction1D {
    let v = harmonic(&grid, OMEGA);
    ground_state(&grid, &v, &rb(), 0.0, n, &GroundStateOptions::new(OMEGA)).unwrap()
}

#[test]
fn branches_are_mirror_images_and_phase_vanishes() {
    let sp = rb();
    let grid = Grid1D::symmetric(80e-6, 2048).unwrap();
    let psi0 = initial_state(grid, 1);
    let fit = reference_fit();
    let sched = RampSchedule::new(0.02, RampShape::Smoothstep, fit_a_si(&fit), OMEGA).unwrap();
    let (r0, r1) = evolve_branches(
        &psi0,
        &sp,
        &sched,
        &fit,
        &EvolutionOptions::default(),
        Execution::default(),
    )
    .unwrap();
    assert!(r0.psi.mirrored().distance(&r1.psi).unwrap() < 1e-8);
    assert_eq!(r0.times(), r1.times());
    for (a, b) in r0.mu_samples.iter().zip(&r1.mu_samples) {
        assert!((a.1 - b.1).abs() < 1e-9 * a.1.abs().max(HBAR * OMEGA));
    }
    let phi = relative_phase(&r0, &r1, 1).unwrap();
    assert!(phi.last().abs() < 1e-3, "{}", phi.last());
    assert_eq!(r0.geometric_phase, 0.0);
    assert!(r0.psi.mean_position() > 0.0 && r1.psi.mean_position() < 0.0);
    for (_, f) in r0.fidelity_samples.iter().chain(&r1.fidelity_samples) {
        assert!((0.0..=1.0).contains(f));
    }
}

fn weak_fit(scale: f64) -> AxialFitParams {
    let f = reference_fit();
    AxialFitParams::new(f.b0, f.k0, f.sigma0, f.a * scale)
}

#[test]
fn slow_weak_ramp_is_adiabatic_and_sudden_is_not() {
    let sp = rb();
    let grid = Grid1D::symmetric(40e-6, 1024).unwrap();
    let psi0 = initial_state(grid, 1);
    let fit = weak_fit(2e-3);
    let slow =
        RampSchedule::new(10.0 / OMEGA, RampShape::Smoothstep, fit_a_si(&fit), OMEGA).unwrap();
    let r = branch_evolution(
        &psi0,
        &sp,
        &slow,
        &fit,
        Branch::Clockwise,
        &EvolutionOptions::default(),
    )
    .unwrap();
    assert!(r.final_fidelity() > 0.99, "{}", r.final_fidelity());
    assert!(!r.below_floor());

    let sudden = RampSchedule {
        duration: 1e-6,
        ..slow
    };
    let s = branch_evolution(
        &psi0,
        &sp,
        &sudden,
        &fit,
        Branch::Clockwise,
        &EvolutionOptions::default(),
    )
    .unwrap();
    let overlap = psi0.fidelity(&s.final_ground_state).unwrap();
    assert!(
        (s.final_fidelity() - overlap).abs() < 1e-4,
        "{} {}",
        s.final_fidelity(),
        overlap
    );
    assert!(s.final_fidelity() < r.final_fidelity() - 0.05);
}

#[test]
fn trapezoid_phase_matches_adaptive_quadrature() {
    // μ difference from a cubic asymmetry growing with the ramp
    let t_end = 0.1;
    let d = |t: f64| {
        let u = t / t_end;
        let s = u * u * (3.0 - 2.0 * u);
        2e-34 * s * s * s + 5e-35 * s
    };
    let m = 20_000;
    let mu0: Vec<(f64, f64)> = (0..=m)
        .map(|i| (t_end * i as f64 / m as f64, 1e-31))
        .collect();
    let mu1: Vec<(f64, f64)> = mu0.iter().map(|&(t, v)| (t, v - d(t))).collect();
    let n = 50;
    let phi = phase_from_samples(&mu0, &mu1, n, 0.0).unwrap();

    fn simpson(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        eps: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * eps {
            return left + right + (left + right - whole) / 15.0;
        }
        simpson(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1)
            + simpson(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1)
    }
    let f = |t: f64| d(t);
    let (fa, fm, fb) = (f(0.0), f(0.5 * t_end), f(t_end));
    let whole = t_end / 6.0 * (fa + 4.0 * fm + fb);
    let integral = simpson(&f, 0.0, t_end, fa, fm, fb, whole, 1e-50, 40);
    let oracle = n as f64 * integral / HBAR;
    assert!(
        (phi.last() / oracle - 1.0).abs() < 1e-6,
        "{} {}",
        phi.last(),
        oracle
    );
}

#[test]
fn timeseries_export() {
    let sp = rb();
    let grid = Grid1D::symmetric(40e-6, 1024).unwrap();
    let psi0 = initial_state(grid, 1);
    let fit = weak_fit(0.05);
    let sched = RampSchedule::for_fit(&fit, &sp, 0.002, RampShape::Linear).unwrap();
    let (r0, r1) = evolve_branches(
        &psi0,
        &sp,
        &sched,
        &fit,
        &EvolutionOptions::default(),
        Execution::Sequential,
    )
    .unwrap();
    let phase = relative_phase(&r0, &r1, 1000).unwrap();
    let csv = timeseries_csv(&r0, &r1, &phase, &sp).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("t_ms,mu0_mG,mu1_mG,Phi_rad,fidelity0,fidelity1")
    );
    assert_eq!(lines.count(), r0.mu_samples.len());
    let last = r0.mu_samples.last().unwrap().0;
    assert_eq!(last, 0.002);
}

#[test]
fn snapshots_at_requested_times() {
    let sp = rb();
    let grid = Grid1D::symmetric(40e-6, 1024).unwrap();
    let psi0 = initial_state(grid, 1);
    let fit = weak_fit(0.01);
    let sched = RampSchedule::for_fit(&fit, &sp, 0.004, RampShape::Smoothstep).unwrap();
    let opts = EvolutionOptions {
        snapshot_times: vec![0.002, 0.0, 0.004, 1.0],
        ..EvolutionOptions::default()
    };
    let r = branch_evolution(&psi0, &sp, &sched, &fit, Branch::Clockwise, &opts).unwrap();
    let times: Vec<f64> = r.snapshots.iter().map(|s| s.0).collect();
    assert_eq!(times.len(), 4);
    assert_eq!(times[0], 0.0);
    assert!(times[1] >= 0.002 && times[1] < 0.002 + 2.0 * r.dt);
    assert_eq!(&times[2..], &[0.004, 0.004]);
    assert_eq!(r.snapshots[0].1, psi0);
    assert_eq!(r.snapshots[3].1, r.psi);
}
