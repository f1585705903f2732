use std::f64::consts::TAU;
use std::fmt::Write as _;

use fluxbec::dynamics::{
    adiabatic_criterion, evolve_branches, fit_omega, g1d, ground_state, relative_phase,
    timeseries_csv, AxialPotential, EvolutionOptions, Grid1D, GroundStateOptions, RampSchedule,
    Wavefunction1D,
};
use fluxbec::entanglement::{
    apply_cnot, density_shift, distinguishability_check, entanglement_report, free_expand,
    fringe_spacing, measured_fringe_period, noon_fringe_spacing, noon_phase_budget,
    sample_outcomes, tof_density, CompositeState, Conditioning, TofDensity,
};
use fluxbec::fluxloop::{Branch, MeasurementBasis};
use fluxbec::magnetostatics::{divergence_probe, field_grid, GridSpec};
use fluxbec::trap::{
    axial_profile, calibrate_bar_length, calibrate_wire_radius, fit_axial_model,
    perturbation_amplitude, sweep_distance, AtomSpecies, AxialFitParams, AxialProfile,
    BarCalibration, CalibrationReport, FitOptions, SolvedTrap,
};
use fluxbec::units::{
    m_to_um, s_to_ms, sig9, tesla_to_gauss, tesla_to_mg, MICROMETER, MILLISECOND,
};
use fluxbec::{Error, Execution, Vec3};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{BranchChoice, ExperimentConfig};
use crate::output::{Output, MANIFEST};
use crate::CliError;

pub struct Context<'a> {
    pub cfg: &'a ExperimentConfig,
    pub exec: Execution,
}

struct Prepared {
    trap: SolvedTrap,
    bar: Option<BarCalibration>,
    wire: Option<CalibrationReport>,
    warnings: Vec<String>,
}

fn um3(p: Vec3) -> [f64; 3] {
    [m_to_um(p.x), m_to_um(p.y), m_to_um(p.z)]
}

fn prepare_trap(ctx: &Context) -> Result<Prepared, CliError> {
    let cfg = ctx.cfg;
    let species = cfg.species();
    let mut design = cfg.design();
    let mut warnings = Vec::new();
    let bar = if cfg.chip.calibrate_bar {
        let (d, report) = calibrate_bar_length(&design, &species, cfg.chip.target_axial_hz)?;
        design = d;
        Some(report)
    } else {
        None
    };
    let mut trap = design.solve(&species)?;
    let wire = if cfg.flux_loop.calibrate_wire_radius && cfg.flux_loop.flux_fraction != 0.0 {
        let (t, report) =
            calibrate_wire_radius(&trap, cfg.flux_loop.target_amplitude_mg, ctx.exec)?;
        trap = t;
        Some(report)
    } else {
        if cfg.flux_loop.calibrate_wire_radius {
            warnings.push("wire-radius calibration skipped: loop carries no current".into());
        }
        None
    };
    Ok(Prepared {
        trap,
        bar,
        wire,
        warnings,
    })
}

fn trap_summary(p: &Prepared) -> Value {
    let c = &p.trap.characterization;
    json!({
        "minimum_um": um3(c.minimum),
        "height_um": m_to_um(p.trap.height()),
        "bottom_field_G": tesla_to_gauss(c.bottom_field),
        "y_bias_G": tesla_to_gauss(p.trap.y_bias),
        "frequencies_hz": c.frequencies_hz(),
        "axial_direction": [p.trap.axis.x, p.trap.axis.y, p.trap.axis.z],
        "gradient_norm_T_per_m": c.gradient_norm,
        "central_bar_mm": p.trap.design.zwire.central_bar * 1e3,
        "wire_radius_um": m_to_um(p.trap.design.wire_radius),
        "bar_calibration": p.bar,
    })
}

pub fn field(ctx: &Context, out: &mut Output) -> Result<(), CliError> {
    let cfg = ctx.cfg;
    let prep = prepare_trap(ctx)?;
    let trap = &prep.trap;
    let assembly = match cfg.field.branch {
        BranchChoice::None => trap.base.clone(),
        BranchChoice::Clockwise => {
            trap.with_loop(Branch::Clockwise, cfg.flux_loop.flux_fraction)?
        }
        BranchChoice::Anticlockwise => {
            trap.with_loop(Branch::Anticlockwise, cfg.flux_loop.flux_fraction)?
        }
    };
    let mut maps = Vec::new();
    for (name, half_width) in [
        ("fig3.csv", cfg.field.half_width_um),
        ("fig4.csv", cfg.field.zoom_half_width_um),
    ] {
        let grid =
            GridSpec::horizontal_plane(trap.minimum(), half_width * MICROMETER, cfg.field.nodes)?;
        let map = field_grid(&assembly, &grid, ctx.exec)?;
        out.write(name, &map.to_csv())?;
        let (i, at) = map.argmin();
        let h = 0.25 * MICROMETER;
        maps.push(json!({
            "file": name,
            "half_width_um": half_width,
            "nodes": map.grid.len(),
            "min_intensity_mG": tesla_to_mg(map.intensity[i]),
            "argmin_um": um3(at),
            "max_intensity_mG": tesla_to_mg(map.max_intensity()),
            "divergence_metric": divergence_probe(&assembly, &grid, h, ctx.exec)?,
        }));
    }
    out.write_json(
        "field.json",
        &json!({
            "branch": cfg.field.branch,
            "flux_fraction": cfg.flux_loop.flux_fraction,
            "trap": trap_summary(&prep),
            "maps": maps,
            "warnings": prep.warnings,
        }),
    )
}

fn profile_rows(out: &mut String, profile: &AxialProfile, label: &str) {
    for (s, b) in profile.s.iter().zip(&profile.intensity) {
        let _ = writeln!(
            out,
            "{},{},{label}",
            sig9(m_to_um(*s)),
            sig9(tesla_to_mg(*b))
        );
    }
}

#[derive(Serialize)]
struct BranchProfiles {
    branch: &'static str,
    amplitude_mg: Option<f64>,
    reduced_amplitude_mg: Option<f64>,
    fit: Option<AxialFitParams>,
    analytic_amplitude_mg: Option<f64>,
}

/// Profiles, amplitudes and fits for both branches; writes fig2a/fig2b.
fn trap_profiles(
    ctx: &Context,
    trap: &SolvedTrap,
    out: Option<&mut Output>,
    warnings: &mut Vec<String>,
) -> Result<Vec<BranchProfiles>, CliError> {
    let cfg = ctx.cfg;
    let half = cfg.profile.half_window_um * MICROMETER;
    let n = cfg.profile.samples;
    let line = trap.axial_line();
    let ff = cfg.flux_loop.flux_fraction;
    let none = trap.profile(None, half, n, ctx.exec)?;
    let mut results = Vec::new();
    let mut files = Vec::new();
    for (name, branch) in [
        ("fig2a.csv", Branch::Clockwise),
        ("fig2b.csv", Branch::Anticlockwise),
    ] {
        let tag = Some(branch).into();
        let full = axial_profile(&trap.with_loop(branch, ff)?, &line, half, n, tag, ctx.exec)?;
        let reduced = axial_profile(
            &trap.with_loop(branch, 0.5 * ff)?,
            &line,
            half,
            n,
            tag,
            ctx.exec,
        )?;
        let mut csv = String::from("y_um,Bmag_mG,branch\n");
        profile_rows(&mut csv, &none, "none");
        profile_rows(
            &mut csv,
            &reduced,
            &format!("{}_{}", branch.label(), 0.5 * ff),
        );
        profile_rows(&mut csv, &full, &format!("{}_{}", branch.label(), ff));
        files.push((name, csv));

        let amplitude = match perturbation_amplitude(&full) {
            Ok(a) => Some(a),
            Err(Error::NoLocalExtrema) => {
                warnings.push(format!(
                    "{}: no local extrema in the axial profile, fit skipped",
                    branch.label()
                ));
                None
            }
            Err(e) => return Err(e.into()),
        };
        let fit = match amplitude {
            Some(_) => Some(fit_axial_model(&full, &FitOptions::default())?),
            None => None,
        };
        results.push(BranchProfiles {
            branch: branch.label(),
            amplitude_mg: amplitude,
            reduced_amplitude_mg: perturbation_amplitude(&reduced).ok(),
            analytic_amplitude_mg: fit.map(|f| f.analytic_amplitude()),
            fit,
        });
    }
    if let Some(out) = out {
        for (name, csv) in files {
            out.write(name, &csv)?;
        }
    }
    Ok(results)
}

pub fn trap(ctx: &Context, out: &mut Output) -> Result<(), CliError> {
    let mut prep = prepare_trap(ctx)?;
    let mut warnings = std::mem::take(&mut prep.warnings);
    let branches = trap_profiles(ctx, &prep.trap, Some(out), &mut warnings)?;
    let circuit = prep.trap.circuit()?;
    let calibration = prep.wire.unwrap_or(CalibrationReport {
        wire_radius_um: m_to_um(circuit.wire_radius()),
        inductance_h: circuit.inductance(),
        current_a: circuit
            .branch_loop(ctx.cfg.flux_loop.flux_fraction, Branch::Clockwise)
            .current(),
        perturbation_amplitude_mg: branches[0].amplitude_mg.unwrap_or(0.0),
    });
    out.write_json("calibration.json", &calibration)?;
    if branches.iter().any(|b| b.fit.is_some()) {
        out.write_json(
            "fit.json",
            &json!({
                "clockwise": branches[0].fit,
                "anticlockwise": branches[1].fit,
            }),
        )?;
    }
    out.write_json(
        "trap.json",
        &json!({
            "trap": trap_summary(&prep),
            "flux_fraction": ctx.cfg.flux_loop.flux_fraction,
            "branches": branches,
            "warnings": warnings,
        }),
    )
}

pub fn sweep(ctx: &Context, out: &mut Output) -> Result<(), CliError> {
    let cfg = ctx.cfg;
    let prep = prepare_trap(ctx)?;
    let distances: Vec<f64> = cfg
        .sweep
        .distances_um
        .iter()
        .map(|d| d * MICROMETER)
        .collect();
    let points = sweep_distance(
        &prep.trap,
        &cfg.species(),
        &distances,
        Branch::Clockwise,
        ctx.exec,
    )?;
    let mut csv = String::from("d_um,amplitude_mG\n");
    let mut rows = Vec::new();
    let mut good: Vec<(f64, f64)> = Vec::new();
    for p in &points {
        let d = m_to_um(p.d);
        match &p.amplitude {
            Ok(a) => {
                let _ = writeln!(csv, "{},{}", sig9(d), sig9(*a));
                good.push((d, *a));
                rows.push(json!({
                    "d_um": d,
                    "amplitude_mG": a,
                    "height_um": m_to_um(p.height),
                    "x_bias_G": tesla_to_gauss(p.x_bias),
                }));
            }
            Err(e) => rows.push(json!({ "d_um": d, "error": e.to_string() })),
        }
    }
    out.write("fig5.csv", &csv)?;
    good.sort_by(|a, b| a.0.total_cmp(&b.0));
    let decreasing = good.windows(2).all(|w| w[1].1 < w[0].1);
    let at = |d: f64| good.iter().find(|p| (p.0 - d).abs() < 1e-9).map(|p| p.1);
    let ratio = match (at(20.0), at(10.0)) {
        (Some(a20), Some(a10)) => Some(a20 / a10),
        _ => None,
    };
    out.write_json(
        "sweep.json",
        &json!({
            "trap": trap_summary(&prep),
            "points": rows,
            "monotone_decreasing": decreasing,
            "ratio_20_over_10": ratio,
        }),
    )
}

/// Inputs of the dynamics: fit, radial frequencies (rad/s) and where they
/// came from.
fn dynamics_inputs(ctx: &Context) -> Result<(AxialFitParams, [f64; 2], &'static str), CliError> {
    let cfg = ctx.cfg;
    if let Some(f) = cfg.dynamics.fit {
        let r = cfg.dynamics.radial_hz;
        return Ok((f.into(), [r[0] * TAU, r[1] * TAU], "config"));
    }
    let prep = prepare_trap(ctx)?;
    let mut warnings = Vec::new();
    let branches = trap_profiles(ctx, &prep.trap, None, &mut warnings)?;
    let fit = branches[0]
        .fit
        .ok_or(CliError::Physics(Error::NoLocalExtrema))?;
    let w = prep.trap.characterization.frequencies;
    Ok((fit, [w[0], w[2]], "computed"))
}

pub struct Evolution {
    pub psi0: Wavefunction1D,
    pub psi1: Wavefunction1D,
    pub phi: f64,
    pub fit: AxialFitParams,
    pub radial: [f64; 2],
    pub omega: f64,
}

pub fn evolve(ctx: &Context, out: &mut Output) -> Result<Evolution, CliError> {
    let cfg = ctx.cfg;
    let d = &cfg.dynamics;
    let species = cfg.species();
    let (fit, radial, source) = dynamics_inputs(ctx)?;
    let omega = fit_omega(&fit, &species)?;
    let schedule = RampSchedule::for_fit(&fit, &species, d.ramp_ms * MILLISECOND, d.shape)?
        .with_omega_path(omega, omega * d.omega_end_factor)?;
    let g = if d.mean_field {
        g1d(&species, radial[0], radial[1])?
    } else {
        0.0
    };
    let grid = Grid1D::symmetric(d.half_width_um * MICROMETER, d.nodes)?;
    let v0 = AxialPotential::from_fit(&grid, &species, &fit, schedule, Branch::Clockwise)?.at(0.0);
    let initial = ground_state(
        &grid,
        &v0,
        &species,
        g,
        d.atom_number,
        &GroundStateOptions::new(omega),
    )?;
    let opts = EvolutionOptions {
        dt: d.dt_us.map(|dt| dt * 1e-6),
        sample_every: d.sample_every,
        g1d: g,
        snapshot_times: d.snapshot_ms.iter().map(|t| t * MILLISECOND).collect(),
        ..EvolutionOptions::default()
    };
    let (r0, r1) = evolve_branches(&initial, &species, &schedule, &fit, &opts, ctx.exec)?;
    let phase = relative_phase(&r0, &r1, d.atom_number)?;
    let adiabatic = adiabatic_criterion(&schedule);

    out.write(
        "evolve_timeseries.csv",
        &timeseries_csv(&r0, &r1, &phase, &species)?,
    )?;
    out.write("psi_initial.csv", &initial.to_csv())?;
    let mut snapshots = Vec::new();
    for r in [&r0, &r1] {
        let b = r.branch.index();
        out.write(&format!("psi{b}_final.csv"), &r.psi.to_csv())?;
        out.write(&format!("gs{b}_final.csv"), &r.final_ground_state.to_csv())?;
        for (t, psi) in &r.snapshots {
            let name = format!("psi{b}_t{:.3}ms.csv", s_to_ms(*t));
            out.write(&name, &psi.to_csv())?;
            snapshots.push(name);
        }
    }
    let min_fidelity = r0.min_fidelity().min(r1.min_fidelity());
    let branches: Vec<Value> = [&r0, &r1]
        .iter()
        .map(|r| {
            json!({
                "branch": r.branch.label(),
                "min_fidelity": r.min_fidelity(),
                "final_fidelity": r.final_fidelity(),
                "below_floor": r.below_floor(),
                "final_mean_position_um": m_to_um(r.psi.mean_position()),
            })
        })
        .collect();
    out.write_json(
        "evolve.json",
        &json!({
            "fit_source": source,
            "fit": fit,
            "radial_hz": [radial[0] / TAU, radial[1] / TAU],
            "axial_hz": omega / TAU,
            "ramp_ms": d.ramp_ms,
            "shape": d.shape,
            "atom_number": d.atom_number,
            "g1d_J_m": g,
            "grid": { "half_width_um": d.half_width_um, "nodes": d.nodes },
            "dt_s": r0.dt,
            "steps": r0.steps,
            "branches": branches,
            "min_fidelity": min_fidelity,
            "non_adiabatic": min_fidelity < 0.99,
            "phi_final_rad": phase.last(),
            "adiabatic": {
                "margin": adiabatic.margin,
                "t_at_max_ms": s_to_ms(adiabatic.t_at_max),
                "threshold": adiabatic.threshold,
                "pass": adiabatic.pass,
                "ramp_time_margin": if d.ramp_ms > 0.0 { Some(1.0 / (omega * d.ramp_ms * MILLISECOND)) } else { None },
            },
            "snapshots": snapshots,
        }),
    )?;
    Ok(Evolution {
        psi0: r0.psi,
        psi1: r1.psi,
        phi: phase.last(),
        fit,
        radial,
        omega,
    })
}

fn read_wavefunction(out: &Output, name: &str, grid: Grid1D, atoms: u64) -> Option<Wavefunction1D> {
    let text = std::fs::read_to_string(out.dir().join(name)).ok()?;
    let amps: Vec<Complex64> = text
        .lines()
        .skip(1)
        .map(|l| {
            let mut it = l.split(',').skip(1);
            let re = it.next()?.parse().ok()?;
            let im = it.next()?.parse().ok()?;
            Some(Complex64::new(re, im))
        })
        .collect::<Option<_>>()?;
    Wavefunction1D::new(grid, amps, atoms).ok()
}

/// Reuse the outputs of an earlier `evolve` with the same configuration.
fn load_evolution(ctx: &Context, out: &Output) -> Option<Evolution> {
    let j = out.read_json("evolve.json")?;
    if j.get("config_hash")?.as_str()? != out.hash() {
        return None;
    }
    let d = &ctx.cfg.dynamics;
    let grid = Grid1D::symmetric(d.half_width_um * MICROMETER, d.nodes).ok()?;
    let fit: AxialFitParams = serde_json::from_value(j.get("fit")?.clone()).ok()?;
    let r = j.get("radial_hz")?.as_array()?;
    let radial = [r.first()?.as_f64()? * TAU, r.get(1)?.as_f64()? * TAU];
    Some(Evolution {
        psi0: read_wavefunction(out, "psi0_final.csv", grid, d.atom_number)?,
        psi1: read_wavefunction(out, "psi1_final.csv", grid, d.atom_number)?,
        phi: j.get("phi_final_rad")?.as_f64()?,
        fit,
        radial,
        omega: j.get("axial_hz")?.as_f64()? * TAU,
    })
}

pub fn tof(ctx: &Context, out: &mut Output) -> Result<(), CliError> {
    let cfg = ctx.cfg;
    let species: AtomSpecies = cfg.species();
    let evo = match load_evolution(ctx, out) {
        Some(e) => e,
        None => evolve(ctx, out)?,
    };
    let n = cfg.dynamics.atom_number;
    let t = cfg.tof.expansion_ms * MILLISECOND;
    let state = CompositeState::symmetric(evo.psi0, evo.psi1, evo.phi)?;
    let expanded = free_expand(&state, &species, t)?;

    let mut warnings = Vec::new();
    let mut csv = String::from("y_um,density_per_um,conditioning,p_outcome\n");
    let mut outcomes = Vec::new();
    let mut densities: Vec<TofDensity> = Vec::new();
    for &c in &cfg.tof.conditioning {
        match tof_density(&expanded, c, t) {
            Ok(d) => {
                d.append_csv_rows(&mut csv);
                outcomes.push(json!({
                    "conditioning": c,
                    "p_outcome": d.probability,
                    "atoms": d.atoms(),
                    "mean_position_um": m_to_um(d.mean_position()),
                }));
                densities.push(d);
            }
            Err(Error::ZeroProbabilityBranch { probability }) => {
                warnings.push(format!(
                    "{}: outcome probability {probability:.3e}, skipped",
                    c.label()
                ));
            }
            Err(e) => return Err(e.into()),
        }
    }
    out.write("tof_density.csv", &csv)?;
    let cnot = apply_cnot(&expanded);
    out.write(
        "tof_cnot.csv",
        &tof_density(&cnot, Conditioning::None, t)?.to_csv(),
    )?;

    let find = |c: Conditioning| densities.iter().find(|d| d.conditioning == c);
    let shift_um = find(Conditioning::Plus).map(|d| m_to_um(density_shift(d, &expanded.phi0)));
    let separation = state.phi0.mean_position() - state.phi1.mean_position();
    let sigma0 = state.phi0.rms_width() * 2f64.sqrt();
    let lambda = if separation.abs() > 0.0 && t > 0.0 {
        Some(fringe_spacing(sigma0, separation.abs(), &species, t)?)
    } else {
        None
    };
    let measured = match (find(Conditioning::Plus), find(Conditioning::None)) {
        (Some(p), Some(u)) => measured_fringe_period(&p.grid, &p.density, &u.density, 0.05),
        _ => None,
    };
    let omegas = [evo.radial[0], evo.omega, evo.radial[1]];
    let distinguish =
        distinguishability_check(&evo.fit, &species, omegas, &cfg.tof.distinguishability_n)?;
    let report = entanglement_report(&state, distinguish.max_atom_number)?;
    out.write_json("entanglement.json", &report)?;

    let samples = sample_outcomes(
        &expanded,
        MeasurementBasis::PlusMinus,
        cfg.tof.trials,
        cfg.seed,
        ctx.exec,
    )?;
    let plus = samples
        .iter()
        .filter(|s| s.outcome == Conditioning::Plus)
        .count();
    out.write_json(
        "tof.json",
        &json!({
            "expansion_ms": cfg.tof.expansion_ms,
            "window": { "nodes": expanded.phi0.grid.len(), "half_width_um": m_to_um(0.5 * expanded.phi0.grid.length()) },
            "outcomes": outcomes,
            "plus_shift_um": shift_um,
            "branch_separation_um": m_to_um(separation),
            "branch_width_um": m_to_um(sigma0),
            "fringe_spacing_um": lambda.map(m_to_um),
            "measured_fringe_period_um": measured.map(m_to_um),
            "noon_fringe_spacing_um": match lambda { Some(l) => Some(m_to_um(noon_fringe_spacing(l, n)?)), None => None },
            "noon_phase_budget_rad": noon_phase_budget(n)?,
            "distinguishability": distinguish,
            "sampling": { "seed": cfg.seed, "trials": cfg.tof.trials, "plus": plus, "minus": samples.len() - plus },
            "warnings": warnings,
        }),
    )
}

const SUMMARIES: [&str; 8] = [
    "calibration.json",
    "entanglement.json",
    "evolve.json",
    "field.json",
    "fit.json",
    "sweep.json",
    "tof.json",
    "trap.json",
];

pub fn report(_ctx: &Context, out: &mut Output) -> Result<(), CliError> {
    let manifest = out.read_json(MANIFEST);
    let mut summaries = serde_json::Map::new();
    for name in SUMMARIES {
        if let Some(v) = out.read_json(name) {
            if v.get("config_hash").and_then(Value::as_str) == Some(out.hash()) {
                summaries.insert(name.into(), v);
            }
        }
    }
    out.write_json(
        "report.json",
        &json!({
            "constants_version": fluxbec::constants::CONSTANTS_VERSION,
            "manifest": manifest,
            "summaries": summaries,
        }),
    )
}
