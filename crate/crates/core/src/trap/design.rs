//! Chip design → solved trap, loop placement, calibrations and distance sweeps.

use serde::{Deserialize, Serialize};

use super::minimize::{derivative_along, golden_section, gradient, MinimizeOptions};
use super::profile::{
    axial_profile, perturbation_amplitude, AxialLine, AxialProfile, ProfileBranch,
};
use super::{intensity_field, trap_frequencies, AtomSpecies, TrapCharacterization};
use crate::exec::{self, Execution};
use crate::fluxloop::{Branch, LoopCircuit};
use crate::magnetostatics::{CircularLoop, SourceAssembly, UniformBias, ZWire};
use crate::units::{m_to_um, GAUSS, MICROMETER, MILLIMETER};
use crate::{Error, Result, Vec3};

/// Everything needed to build the trap and its loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapDesign {
    pub zwire: ZWire,
    /// Uniform bias along x, T.
    pub x_bias: f64,
    /// Target |B| at the trap bottom, T; reached by tuning a y bias.
    pub bottom_field: f64,
    /// Loop radius, m.
    pub loop_radius: f64,
    /// Loop centre distance below the trap minimum, m.
    pub loop_distance: f64,
    /// Loop conductor radius, m.
    pub wire_radius: f64,
    /// Persistent-current flux in units of Φ0 (magnitude).
    pub flux_fraction: f64,
    /// Add the uniform z bias that threads half a flux quantum through the loop.
    pub loop_z_bias: bool,
    /// Starting height for the minimum search, m.
    pub guess_height: f64,
}

impl Default for TrapDesign {
    fn default() -> Self {
        TrapDesign {
            zwire: ZWire {
                current: 5.0,
                central_bar: 2.0 * MILLIMETER,
                lead_length: 50.0 * MILLIMETER,
            },
            x_bias: 20.0 * GAUSS,
            bottom_field: GAUSS,
            loop_radius: 5.0 * MICROMETER,
            loop_distance: 10.0 * MICROMETER,
            wire_radius: 0.5 * MICROMETER,
            flux_fraction: 0.5,
            loop_z_bias: false,
            guess_height: 500.0 * MICROMETER,
        }
    }
}

/// A trap with its y bias tuned and its minimum, frequencies and axial
/// direction resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct SolvedTrap {
    pub design: TrapDesign,
    pub y_bias: f64,
    /// Z-wire plus biases, no loop current.
    pub base: SourceAssembly,
    pub characterization: TrapCharacterization,
    /// Unit vector of the weak (axial) mode in the horizontal plane.
    pub axis: Vec3,
}

impl TrapDesign {
    fn base_assembly(&self, y_bias: f64) -> Result<SourceAssembly> {
        let mut a = SourceAssembly::new(self.zwire.sources()?)?;
        a.push(UniformBias::new(Vec3::new(self.x_bias, y_bias, 0.0))?);
        if self.loop_z_bias {
            let probe = CircularLoop::new(Vec3::ZERO, Vec3::Z, self.loop_radius, 0.0)?;
            let bz = crate::fluxloop::bias_field_for_half_quantum(&probe);
            a.push(UniformBias::new(Vec3::new(0.0, 0.0, bz))?);
        }
        Ok(a)
    }

    /// Whether the assembly is symmetric under a half turn about z (then the
    /// minimum lies on the z axis).
    fn has_half_turn_symmetry(&self) -> bool {
        !self.loop_z_bias
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("x_bias", self.x_bias),
            ("bottom_field", self.bottom_field),
            ("loop_radius", self.loop_radius),
            ("loop_distance", self.loop_distance),
            ("wire_radius", self.wire_radius),
            ("guess_height", self.guess_height),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be > 0, got {v}")));
            }
        }
        if !self.flux_fraction.is_finite() {
            return Err(Error::InvalidInput("flux_fraction must be finite".into()));
        }
        Ok(())
    }

    /// Tune the y bias for the target bottom field and characterise the trap.
    pub fn solve(&self, species: &AtomSpecies) -> Result<SolvedTrap> {
        self.solve_from(species, 0.0, Vec3::new(0.0, 0.0, self.guess_height))
    }

    fn solve_from(&self, species: &AtomSpecies, y_bias0: f64, guess: Vec3) -> Result<SolvedTrap> {
        self.validate()?;
        let mut y_bias = y_bias0;
        let mut guess = guess;
        let mut converged = false;
        for _ in 0..20 {
            let base = self.base_assembly(y_bias)?;
            let min = self.locate_minimum(&base, species, guess)?;
            let b = base.total_field(min)?;
            guess = min;
            let err = self.bottom_field - b.norm();
            // d|B|/d(y bias) = B_y/|B|
            y_bias += err * b.norm() / b.y;
            if err.abs() < 1e-9 * self.bottom_field {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::CalibrationFailed(
                "y bias did not reach the bottom-field target".into(),
            ));
        }
        let base = self.base_assembly(y_bias)?;
        let minimum = self.locate_minimum(&base, species, guess)?;
        let (frequencies, axes) = trap_frequencies(&base, species, minimum)?;
        let gradient_norm = gradient(
            &intensity_field(&base),
            minimum,
            MinimizeOptions::default().fd_step,
        )?
        .norm();
        let wmin = frequencies.iter().cloned().fold(f64::INFINITY, f64::min);
        let wmax = frequencies.iter().cloned().fold(0.0, f64::max);
        let characterization = TrapCharacterization {
            minimum,
            bottom_field: base.intensity(minimum)?,
            frequencies,
            axes,
            hessian_condition: (wmax / wmin).powi(2),
            gradient_norm,
        };
        let mut axis = characterization.axial_axis();
        axis.z = 0.0;
        let axis = axis.normalized().unwrap_or(Vec3::Y);
        Ok(SolvedTrap {
            design: *self,
            y_bias,
            base,
            characterization,
            axis,
        })
    }

    fn locate_minimum(
        &self,
        base: &SourceAssembly,
        species: &AtomSpecies,
        guess: Vec3,
    ) -> Result<Vec3> {
        let general = super::find_minimum(base, species, guess)?.minimum;
        if !self.has_half_turn_symmetry() || general.x.hypot(general.y) > MICROMETER {
            return Ok(general);
        }
        // refine the height on the symmetry axis itself
        let z0 = general.z;
        let f = |z: f64| base.intensity(Vec3::new(0.0, 0.0, z));
        let (mut z, _) = golden_section(f, z0 - 2.0 * MICROMETER, z0 + 2.0 * MICROMETER, 1e-13)?;
        // values cannot resolve the last few fm; finish with Newton on dB/dz
        let field = intensity_field(base);
        let h = MinimizeOptions::default().fd_step;
        for _ in 0..5 {
            let p = Vec3::new(0.0, 0.0, z);
            let g = derivative_along(&field, p, Vec3::Z, h)?;
            let curv =
                (field(p + Vec3::Z * h)? - 2.0 * field(p)? + field(p - Vec3::Z * h)?) / (h * h);
            if !(curv > 0.0) {
                break;
            }
            let dz = g / curv;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        Ok(Vec3::new(0.0, 0.0, z))
    }
}

impl SolvedTrap {
    pub fn height(&self) -> f64 {
        self.characterization.minimum.z
    }

    pub fn minimum(&self) -> Vec3 {
        self.characterization.minimum
    }

    /// Loop geometry (zero current) placed `loop_distance` below the minimum.
    pub fn loop_geometry(&self) -> Result<CircularLoop> {
        let c = self.minimum() - Vec3::Z * self.design.loop_distance;
        CircularLoop::new(c, Vec3::Z, self.design.loop_radius, 0.0)
    }

    pub fn circuit(&self) -> Result<LoopCircuit> {
        LoopCircuit::new(self.loop_geometry()?, self.design.wire_radius)
    }

    /// Base assembly plus the loop carrying `branch`'s persistent current.
    pub fn with_loop(&self, branch: Branch, flux_fraction: f64) -> Result<SourceAssembly> {
        let lp = self.circuit()?.branch_loop(flux_fraction, branch);
        Ok(self.base.with(lp))
    }

    pub fn axial_line(&self) -> AxialLine {
        AxialLine {
            origin: self.minimum(),
            direction: self.axis,
        }
    }

    /// Axial profile for a loop branch (or no loop current).
    pub fn profile(
        &self,
        branch: Option<Branch>,
        half_window: f64,
        samples: usize,
        exec: Execution,
    ) -> Result<AxialProfile> {
        let assembly = match branch {
            Some(b) => self.with_loop(b, self.design.flux_fraction)?,
            None => self.base.clone(),
        };
        axial_profile(
            &assembly,
            &self.axial_line(),
            half_window,
            samples,
            ProfileBranch::from(branch),
            exec,
        )
    }

    pub fn with_wire_radius(&self, wire_radius: f64) -> SolvedTrap {
        let mut out = self.clone();
        out.design.wire_radius = wire_radius;
        out
    }
}

/// Default axial half-window for amplitudes and fits, m.
pub const PROFILE_HALF_WINDOW: f64 = 60.0 * MICROMETER;
/// Default axial sample count.
pub const PROFILE_SAMPLES: usize = 601;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarCalibration {
    pub central_bar_mm: f64,
    pub frequencies_hz: [f64; 3],
    pub height_um: f64,
    pub y_bias_g: f64,
}

fn axial_hz(design: &TrapDesign, species: &AtomSpecies, bar: f64) -> Result<f64> {
    let mut d = *design;
    d.zwire.central_bar = bar;
    Ok(d.solve(species)?.characterization.frequencies_hz()[1])
}

/// Bisect the Z-wire central-bar length in `[1, 20]` mm for the target axial
/// frequency.
pub fn calibrate_bar_length(
    design: &TrapDesign,
    species: &AtomSpecies,
    target_axial_hz: f64,
) -> Result<(TrapDesign, BarCalibration)> {
    let scan = [1.0, 2.0, 3.0, 5.0, 8.0, 12.0, 20.0].map(|mm| mm * MILLIMETER);
    let mut prev: Option<(f64, f64)> = None;
    let mut bracket = None;
    for &bar in &scan {
        let Ok(f) = axial_hz(design, species, bar) else {
            continue;
        };
        let g = f - target_axial_hz;
        if let Some((pb, pg)) = prev {
            if pg.signum() != g.signum() {
                bracket = Some((pb, pg, bar));
                break;
            }
        }
        prev = Some((bar, g));
    }
    let Some((mut lo, mut glo, mut hi)) = bracket else {
        return Err(Error::CalibrationFailed(format!(
            "axial frequency {target_axial_hz} Hz not bracketed by central bar in [1, 20] mm"
        )));
    };
    while (hi - lo) > 1e-6 * hi {
        let mid = 0.5 * (lo + hi);
        let g = axial_hz(design, species, mid)? - target_axial_hz;
        if g.signum() == glo.signum() {
            lo = mid;
            glo = g;
        } else {
            hi = mid;
        }
    }
    let mut out = *design;
    out.zwire.central_bar = 0.5 * (lo + hi);
    let solved = out.solve(species)?;
    Ok((
        out,
        BarCalibration {
            central_bar_mm: out.zwire.central_bar / MILLIMETER,
            frequencies_hz: solved.characterization.frequencies_hz(),
            height_um: m_to_um(solved.height()),
            y_bias_g: solved.y_bias / GAUSS,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub wire_radius_um: f64,
    #[serde(rename = "inductance_H")]
    pub inductance_h: f64,
    #[serde(rename = "current_A")]
    pub current_a: f64,
    #[serde(rename = "perturbation_amplitude_mG")]
    pub perturbation_amplitude_mg: f64,
}

/// Full-profile amplitude (mG) of the clockwise branch for a wire radius.
pub fn branch_amplitude(trap: &SolvedTrap, wire_radius: f64, exec: Execution) -> Result<f64> {
    let t = trap.with_wire_radius(wire_radius);
    let p = t.profile(
        Some(Branch::Clockwise),
        PROFILE_HALF_WINDOW,
        PROFILE_SAMPLES,
        exec,
    )?;
    perturbation_amplitude(&p)
}

/// Bisect the loop wire radius in `[0.1, 1.0]` µm for the target amplitude.
pub fn calibrate_wire_radius(
    trap: &SolvedTrap,
    target_mg: f64,
    exec: Execution,
) -> Result<(SolvedTrap, CalibrationReport)> {
    let (mut lo, mut hi) = (0.1 * MICROMETER, 1.0 * MICROMETER);
    let glo0 = branch_amplitude(trap, lo, exec)? - target_mg;
    let ghi0 = branch_amplitude(trap, hi, exec)? - target_mg;
    if glo0.signum() == ghi0.signum() {
        return Err(Error::CalibrationFailed(format!(
            "amplitude {target_mg} mG not reachable with wire radius in [0.1, 1.0] um"
        )));
    }
    let mut glo = glo0;
    while hi - lo > 1e-7 * hi {
        let mid = 0.5 * (lo + hi);
        let g = branch_amplitude(trap, mid, exec)? - target_mg;
        if g.signum() == glo.signum() {
            lo = mid;
            glo = g;
        } else {
            hi = mid;
        }
    }
    let a_w = 0.5 * (lo + hi);
    let solved = trap.with_wire_radius(a_w);
    let circuit = solved.circuit()?;
    let report = CalibrationReport {
        wire_radius_um: m_to_um(a_w),
        inductance_h: circuit.inductance(),
        current_a: circuit
            .branch_loop(solved.design.flux_fraction, Branch::Clockwise)
            .current(),
        perturbation_amplitude_mg: branch_amplitude(trap, a_w, exec)?,
    };
    Ok((solved, report))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    /// Trap-centre to loop-centre distance, m.
    pub d: f64,
    pub height: f64,
    pub x_bias: f64,
    /// Peak-to-trough of the loop-induced change of the axial profile, mG.
    pub amplitude: Result<f64>,
    /// Local max minus local min of the full profile, mG, when both exist.
    pub full_amplitude: Option<f64>,
}

/// Move the trap (by re-tuning the x bias) to each distance `d` above the
/// loop, which stays where `reference` put it, and measure the perturbation.
///
/// Per-point failures are recorded in the point and the sweep continues.
pub fn sweep_distance(
    reference: &SolvedTrap,
    species: &AtomSpecies,
    distances: &[f64],
    branch: Branch,
    exec: Execution,
) -> Result<Vec<SweepPoint>> {
    let loop_geom = reference.loop_geometry()?;
    let z_loop = loop_geom.center().z;
    let lp = reference
        .circuit()?
        .branch_loop(reference.design.flux_fraction, branch);
    let points = exec::map(exec, distances, |&d| {
        let result = (|| -> Result<(SolvedTrap, f64, Option<f64>)> {
            if !(d > crate::constants::GEOMETRY_EPSILON) {
                return Err(Error::InvalidInput(format!(
                    "sweep distance {d} m too small"
                )));
            }
            let trap = move_trap(reference, species, z_loop + d)?;
            let half_window = PROFILE_HALF_WINDOW.max(6.0 * d);
            let line = trap.axial_line();
            let with_loop = trap.base.with(lp);
            let tagged = ProfileBranch::from(Some(branch));
            // inner loop sequential: the sweep itself is the parallel level
            let full = axial_profile(
                &with_loop,
                &line,
                half_window,
                PROFILE_SAMPLES,
                tagged,
                Execution::Sequential,
            )?;
            let bare = axial_profile(
                &trap.base,
                &line,
                half_window,
                PROFILE_SAMPLES,
                tagged,
                Execution::Sequential,
            )?;
            let amp = perturbation_amplitude(&full.minus(&bare)?)?;
            Ok((trap, amp, perturbation_amplitude(&full).ok()))
        })();
        match result {
            Ok((trap, amp, full)) => SweepPoint {
                d,
                height: trap.height(),
                x_bias: trap.design.x_bias,
                amplitude: Ok(amp),
                full_amplitude: full,
            },
            Err(e) => SweepPoint {
                d,
                height: f64::NAN,
                x_bias: f64::NAN,
                amplitude: Err(e),
                full_amplitude: None,
            },
        }
    });
    Ok(points)
}

/// Re-solve the trap with the x bias adjusted so its minimum sits at `height`.
pub fn move_trap(reference: &SolvedTrap, species: &AtomSpecies, height: f64) -> Result<SolvedTrap> {
    let h_ref = reference.height();
    if (height - h_ref).abs() < 1e-12 {
        return Ok(reference.clone());
    }
    let solve_at = |bx: f64, guess_h: f64| -> Result<SolvedTrap> {
        let mut d = reference.design;
        d.x_bias = bx;
        d.guess_height = guess_h;
        d.solve_from(species, reference.y_bias, Vec3::new(0.0, 0.0, guess_h))
    };
    // height roughly ∝ 1/x-bias for a long bar; secant from there
    let bx0 = reference.design.x_bias;
    let mut x0 = bx0;
    let mut h0 = h_ref;
    let mut x1 = bx0 * h_ref / height;
    let mut t1 = solve_at(x1, height)?;
    for _ in 0..30 {
        let h1 = t1.height();
        if (h1 - height).abs() < 1e-10 {
            return Ok(t1);
        }
        let slope = (h1 - h0) / (x1 - x0);
        let x2 = x1 + (height - h1) / slope;
        x0 = x1;
        h0 = h1;
        x1 = x2;
        t1 = solve_at(x1, height)?;
    }
    Err(Error::CalibrationFailed(format!(
        "could not move trap to height {:.3} um",
        m_to_um(height)
    )))
}
