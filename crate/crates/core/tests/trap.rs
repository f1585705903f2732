use std::sync::OnceLock;

use fluxbec::fluxloop::Branch;
use fluxbec::magnetostatics::{field_grid, GridSpec, UniformBias};
use fluxbec::trap::minimize::MinimizeOptions;
use fluxbec::trap::*;
use fluxbec::units::{m_to_um, tesla_to_mg, GAUSS, MICROMETER};
use fluxbec::{Error, Execution, Vec3};

const MU0: f64 = 4.0 * std::f64::consts::PI * 1e-7;

fn species() -> AtomSpecies {
    AtomSpecies::rb87()
}

/// Bar length tuned to a 10 Hz axial frequency, wire radius tuned to 5.5 mG.
fn calibrated() -> &'static (BarCalibration, SolvedTrap, CalibrationReport) {
    static CELL: OnceLock<(BarCalibration, SolvedTrap, CalibrationReport)> = OnceLock::new();
    CELL.get_or_init(|| {
        let (design, bar) = calibrate_bar_length(&TrapDesign::default(), &species(), 10.0).unwrap();
        let trap = design.solve(&species()).unwrap();
        let (trap, report) = calibrate_wire_radius(&trap, 5.5, Execution::default()).unwrap();
        (bar, trap, report)
    })
}

#[test]
fn trap_bottom_and_height() {
    let (_, trap, _) = calibrated();
    let design = trap.design;
    let bottom = trap.characterization.bottom_field;
    assert!((bottom - GAUSS).abs() < 0.01 * GAUSS, "{bottom}");
    // infinite straight wire: B = μ0 I / 2π d cancels the x bias at d
    let oracle = MU0 * design.zwire.current / (2.0 * std::f64::consts::PI * design.x_bias);
    let h = trap.height();
    assert!(
        (h - oracle).abs() < 0.05 * oracle,
        "{} vs {}",
        m_to_um(h),
        m_to_um(oracle)
    );
    assert!(trap.characterization.gradient_norm < 1e-8);
}

#[test]
fn short_bar_sits_lower() {
    let short = TrapDesign::default().solve(&species()).unwrap();
    let (_, long, _) = calibrated();
    assert!(short.height() < long.height());
    assert!((short.characterization.bottom_field - GAUSS).abs() < 1e-9 * GAUSS);
}

#[test]
fn calibrated_frequencies() {
    let (bar, trap, _) = calibrated();
    let [fx, fy, fz] = bar.frequencies_hz;
    assert!((fy - 10.0).abs() < 0.15 * 10.0);
    assert!((fx - 540.0).abs() < 0.15 * 540.0, "{fx}");
    assert!((fz - 540.0).abs() < 0.15 * 540.0, "{fz}");
    assert!(bar.central_bar_mm > 1.0 && bar.central_bar_mm < 20.0);
    assert_eq!(trap.characterization.frequencies_hz()[1], fy);
}

#[test]
fn frequencies_stable_under_step_halving() {
    let (_, trap, _) = calibrated();
    let f = intensity_field(&trap.base);
    let sp = species();
    let (w1, _) = trap_frequencies_of(&f, &sp, trap.minimum(), FREQUENCY_FD_STEP).unwrap();
    let (w2, _) = trap_frequencies_of(&f, &sp, trap.minimum(), 0.5 * FREQUENCY_FD_STEP).unwrap();
    for i in 0..3 {
        assert!(
            (w1[i] - w2[i]).abs() < 0.01 * w1[i],
            "{i}: {} {}",
            w1[i],
            w2[i]
        );
    }
}

#[test]
fn minimum_from_displaced_guess_matches_grid_scan() {
    let (_, trap, _) = calibrated();
    let r0 = trap.minimum();
    let guess = r0 + Vec3::new(30.0, -25.0, 30.0) * MICROMETER;
    let c = find_minimum(&trap.base, &species(), guess).unwrap();
    assert!((c.minimum - r0).norm() < 1e-9, "{:?}", c.minimum - r0);

    // brute-force scan: axial spacing coarse, radial fine
    let grid = GridSpec::centered(
        r0 + Vec3::new(0.0, 3.0, 0.0) * MICROMETER,
        [4.0 * MICROMETER, 40.0 * MICROMETER, 4.0 * MICROMETER],
        [41, 81, 41],
    )
    .unwrap();
    let map = field_grid(&trap.base, &grid, Execution::default()).unwrap();
    let (_, node) = map.argmin();
    let spacing = grid.spacing();
    let d = c.minimum - node;
    assert!(
        d.x.abs() <= spacing[0] && d.y.abs() <= spacing[1] && d.z.abs() <= spacing[2],
        "{d:?}"
    );
}

#[test]
fn no_loop_profile_is_even() {
    let (_, trap, _) = calibrated();
    let p = trap
        .profile(
            None,
            PROFILE_HALF_WINDOW,
            PROFILE_SAMPLES,
            Execution::default(),
        )
        .unwrap();
    let n = p.len();
    for i in 0..n {
        let (a, b) = (p.intensity[i], p.intensity[n - 1 - i]);
        assert!((a - b).abs() <= 1e-12 * a, "{i}");
    }
    assert_eq!(perturbation_amplitude(&p), Err(Error::NoLocalExtrema));
}

#[test]
fn branches_are_mirror_images() {
    let (_, trap, _) = calibrated();
    let cw = trap
        .profile(
            Some(Branch::Clockwise),
            PROFILE_HALF_WINDOW,
            PROFILE_SAMPLES,
            Execution::default(),
        )
        .unwrap();
    let acw = trap
        .profile(
            Some(Branch::Anticlockwise),
            PROFILE_HALF_WINDOW,
            PROFILE_SAMPLES,
            Execution::default(),
        )
        .unwrap();
    let n = cw.len();
    for i in 0..n {
        let (a, b) = (acw.intensity[i], cw.intensity[n - 1 - i]);
        assert!((a - b).abs() <= 1e-12 * a, "{i}: {a} {b}");
    }
}

#[test]
fn perturbation_is_odd_and_linear_in_current() {
    let (_, trap, _) = calibrated();
    let exec = Execution::default();
    let line = trap.axial_line();
    let bare = axial_profile(
        &trap.base,
        &line,
        PROFILE_HALF_WINDOW,
        PROFILE_SAMPLES,
        ProfileBranch::None,
        exec,
    )
    .unwrap();
    let delta = |f: f64| {
        let a = trap.with_loop(Branch::Clockwise, f).unwrap();
        axial_profile(
            &a,
            &line,
            PROFILE_HALF_WINDOW,
            PROFILE_SAMPLES,
            ProfileBranch::Clockwise,
            exec,
        )
        .unwrap()
        .minus(&bare)
        .unwrap()
        .intensity
    };
    let half = delta(0.5);
    let quarter = delta(0.25);
    let peak = half.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let hi = half.iter().cloned().fold(f64::MIN, f64::max);
    let lo = half.iter().cloned().fold(f64::MAX, f64::min);
    let n = half.len();
    for i in 0..n {
        let even = 0.5 * (half[i] + half[n - 1 - i]);
        assert!(even.abs() < 0.01 * (hi - lo), "odd at {i}");
        assert!(
            (quarter[i] - 0.5 * half[i]).abs() < 0.05 * peak,
            "linear at {i}"
        );
    }
}

#[test]
fn calibrated_amplitude_at_ten_microns() {
    let (_, trap, report) = calibrated();
    assert!((report.perturbation_amplitude_mg - 5.5).abs() < 0.55);
    assert!(report.wire_radius_um > 0.1 && report.wire_radius_um < 1.0);
    assert!((trap.design.wire_radius - report.wire_radius_um * MICROMETER).abs() < 1e-18);
    let direct = branch_amplitude(trap, trap.design.wire_radius, Execution::Sequential).unwrap();
    assert!((direct - report.perturbation_amplitude_mg).abs() < 1e-9);
}

#[test]
fn fit_recovers_reference_parameters_and_flips_sign() {
    let (_, trap, _) = calibrated();
    let exec = Execution::default();
    let cw = trap
        .profile(
            Some(Branch::Clockwise),
            PROFILE_HALF_WINDOW,
            PROFILE_SAMPLES,
            exec,
        )
        .unwrap();
    let acw = trap
        .profile(
            Some(Branch::Anticlockwise),
            PROFILE_HALF_WINDOW,
            PROFILE_SAMPLES,
            exec,
        )
        .unwrap();
    let fc = fit_axial_model(&cw, &FitOptions::default()).unwrap();
    let fa = fit_axial_model(&acw, &FitOptions::default()).unwrap();
    for (got, want) in [
        (fc.b0, 999.85),
        (fc.k0, 0.00031),
        (fc.sigma0, 10.13),
        (fc.a, -32.0),
    ] {
        assert!((got - want).abs() < 0.1 * want.abs(), "{got} vs {want}");
    }
    assert!(fa.a > 0.0);
    assert!((fa.a + fc.a).abs() < 1e-6 * fc.a.abs(), "{} {}", fa.a, fc.a);
    assert!((fa.sigma0 - fc.sigma0).abs() < 1e-6 * fc.sigma0);
    assert!((fa.b0 - fc.b0).abs() < 1e-9 * fc.b0);
}

#[test]
fn fit_shape_insensitive_to_bias_offset() {
    let (_, trap, _) = calibrated();
    let exec = Execution::default();
    let line = trap.axial_line();
    let with_loop = trap.with_loop(Branch::Clockwise, 0.5).unwrap();
    let b_min = trap.base.total_field(trap.minimum()).unwrap();
    let offset = UniformBias::new(b_min.normalized().unwrap() * (0.1 * GAUSS)).unwrap();
    let shifted = with_loop.with(offset);
    let p0 = axial_profile(
        &with_loop,
        &line,
        PROFILE_HALF_WINDOW,
        PROFILE_SAMPLES,
        ProfileBranch::Clockwise,
        exec,
    )
    .unwrap();
    let p1 = axial_profile(
        &shifted,
        &line,
        PROFILE_HALF_WINDOW,
        PROFILE_SAMPLES,
        ProfileBranch::Clockwise,
        exec,
    )
    .unwrap();
    let f0 = fit_axial_model(&p0, &FitOptions::default()).unwrap();
    let f1 = fit_axial_model(&p1, &FitOptions::default()).unwrap();
    assert!((f1.b0 - f0.b0 - 100.0).abs() < 1.0, "{} {}", f0.b0, f1.b0);
    assert!((f1.a - f0.a).abs() < 0.01 * f0.a.abs());
    assert!((f1.sigma0 - f0.sigma0).abs() < 0.01 * f0.sigma0);
}

#[test]
fn distance_sweep_decays() {
    let (_, trap, _) = calibrated();
    let ds: Vec<f64> = [8.0, 10.0, 12.0, 15.0, 20.0, 25.0, 30.0, 100.0]
        .iter()
        .map(|d| d * MICROMETER)
        .collect();
    let pts = sweep_distance(
        trap,
        &species(),
        &ds,
        Branch::Clockwise,
        Execution::default(),
    )
    .unwrap();
    let amp: Vec<f64> = pts.iter().map(|p| *p.amplitude.as_ref().unwrap()).collect();
    for w in amp[..7].windows(2) {
        assert!(w[1] < w[0], "{amp:?}");
    }
    assert!(amp[4] / amp[1] < 0.2);
    assert!(amp[7] < 0.05);
    for p in &pts {
        let loop_z = trap.loop_geometry().unwrap().center().z;
        assert!((p.height - loop_z - p.d).abs() < 1e-9);
    }
    assert!((amp[1] - 5.5).abs() < 0.01);
}

#[test]
fn sweep_records_bad_points_and_continues() {
    let (_, trap, _) = calibrated();
    let ds = [0.0, 10.0 * MICROMETER];
    let pts = sweep_distance(
        trap,
        &species(),
        &ds,
        Branch::Clockwise,
        Execution::Sequential,
    )
    .unwrap();
    assert!(pts[0].amplitude.is_err());
    assert!(pts[1].amplitude.is_ok());
}

#[test]
fn sweep_is_identical_sequential_and_parallel() {
    let (_, trap, _) = calibrated();
    let ds = [9.0 * MICROMETER, 14.0 * MICROMETER, 21.0 * MICROMETER];
    let a = sweep_distance(
        trap,
        &species(),
        &ds,
        Branch::Clockwise,
        Execution::Sequential,
    )
    .unwrap();
    let b = sweep_distance(
        trap,
        &species(),
        &ds,
        Branch::Clockwise,
        Execution::Parallel,
    )
    .unwrap();
    assert_eq!(a, b);
}

#[test]
fn bar_calibration_rejects_unreachable_target() {
    assert!(matches!(
        calibrate_bar_length(&TrapDesign::default(), &species(), 1e4),
        Err(Error::CalibrationFailed(_))
    ));
}

#[test]
fn minimizer_options_cap_iterations() {
    let (_, trap, _) = calibrated();
    let opts = MinimizeOptions {
        max_iterations: 3,
        ..MinimizeOptions::default()
    };
    let f = intensity_field(&trap.base);
    let r = find_minimum_of(&f, &species(), trap.minimum() + Vec3::Y * 50e-6, &opts);
    assert!(matches!(r, Err(Error::MinimizationDidNotConverge { .. })));
}

#[test]
fn display_units_of_profile() {
    let (_, trap, _) = calibrated();
    let p = trap
        .profile(
            None,
            PROFILE_HALF_WINDOW,
            PROFILE_SAMPLES,
            Execution::default(),
        )
        .unwrap();
    let (y, b) = p.in_display_units();
    assert!((y[0] + 60.0).abs() < 1e-9);
    assert!((b[300] - tesla_to_mg(trap.characterization.bottom_field)).abs() < 1e-6);
    let csv = p.to_csv();
    assert!(csv.starts_with("y_um,Bmag_mG,branch\n"));
    assert_eq!(csv.lines().count(), PROFILE_SAMPLES + 1);
}
