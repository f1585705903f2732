//! Experiment configuration: a JSON document with a `schema` version.
//! Every section and key is optional; missing values take the defaults
//! below. Unknown keys are rejected.

use std::path::Path;

use fluxbec::constants::{RB87_MASS, RB87_SCATTERING_LENGTH};
use fluxbec::dynamics::RampShape;
use fluxbec::entanglement::Conditioning;
use fluxbec::magnetostatics::ZWire;
use fluxbec::trap::{AtomSpecies, AxialFitParams, TrapDesign};
use fluxbec::units::{GAUSS, MICROMETER, MILLIMETER};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub seed: u64,
    pub output_dir: String,
    pub species: SpeciesConfig,
    pub chip: ChipConfig,
    #[serde(rename = "loop")]
    pub flux_loop: LoopConfig,
    pub field: FieldConfig,
    pub profile: ProfileConfig,
    pub sweep: SweepConfig,
    pub dynamics: DynamicsConfig,
    pub tof: TofConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpeciesConfig {
    pub mass_kg: f64,
    pub mf_gf: f64,
    pub scattering_length_nm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChipConfig {
    pub current_a: f64,
    pub central_bar_mm: f64,
    pub lead_length_mm: f64,
    pub x_bias_g: f64,
    pub bottom_field_g: f64,
    pub guess_height_um: f64,
    /// Tune the central bar for `target_axial_hz` before anything else.
    pub calibrate_bar: bool,
    pub target_axial_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoopConfig {
    pub radius_um: f64,
    /// Loop centre below the trap minimum.
    pub distance_um: f64,
    pub wire_radius_um: f64,
    pub flux_fraction: f64,
    /// Add the uniform z bias that threads half a flux quantum.
    pub z_bias: bool,
    /// Tune the wire radius for `target_amplitude_mg`.
    pub calibrate_wire_radius: bool,
    pub target_amplitude_mg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchChoice {
    None,
    Clockwise,
    Anticlockwise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldConfig {
    pub half_width_um: f64,
    pub zoom_half_width_um: f64,
    pub nodes: usize,
    pub branch: BranchChoice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileConfig {
    pub half_window_um: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub distances_um: Vec<f64>,
}

/// Fit parameters in display units (mG, µm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub b0: f64,
    pub k0: f64,
    pub sigma0: f64,
    pub a: f64,
}

impl From<FitConfig> for AxialFitParams {
    fn from(f: FitConfig) -> Self {
        AxialFitParams::new(f.b0, f.k0, f.sigma0, f.a)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsConfig {
    pub half_width_um: f64,
    pub nodes: usize,
    pub ramp_ms: f64,
    pub shape: RampShape,
    pub atom_number: u64,
    pub mean_field: bool,
    /// Radial frequencies (x, z) for the mean-field coupling when the trap
    /// is not computed.
    pub radial_hz: [f64; 2],
    /// Axial ω at the end of the ramp relative to the start.
    pub omega_end_factor: f64,
    pub sample_every: usize,
    pub dt_us: Option<f64>,
    pub snapshot_ms: Vec<f64>,
    /// Use these instead of fitting the computed axial profile.
    pub fit: Option<FitConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TofConfig {
    pub expansion_ms: f64,
    pub conditioning: Vec<Conditioning>,
    pub trials: u64,
    pub distinguishability_n: Vec<u64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            schema: SCHEMA_VERSION,
            seed: 0,
            output_dir: "out".into(),
            species: SpeciesConfig::default(),
            chip: ChipConfig::default(),
            flux_loop: LoopConfig::default(),
            field: FieldConfig::default(),
            profile: ProfileConfig::default(),
            sweep: SweepConfig::default(),
            dynamics: DynamicsConfig::default(),
            tof: TofConfig::default(),
        }
    }
}

impl Default for SpeciesConfig {
    fn default() -> Self {
        SpeciesConfig {
            mass_kg: RB87_MASS,
            mf_gf: 1.0,
            scattering_length_nm: RB87_SCATTERING_LENGTH * 1e9,
        }
    }
}

impl Default for ChipConfig {
    fn default() -> Self {
        ChipConfig {
            current_a: 5.0,
            central_bar_mm: 2.0,
            lead_length_mm: 50.0,
            x_bias_g: 20.0,
            bottom_field_g: 1.0,
            guess_height_um: 500.0,
            calibrate_bar: true,
            target_axial_hz: 10.0,
        }
    }
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig {
            radius_um: 5.0,
            distance_um: 10.0,
            wire_radius_um: 0.5,
            flux_fraction: 0.5,
            z_bias: false,
            calibrate_wire_radius: true,
            target_amplitude_mg: 5.5,
        }
    }
}

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig {
            half_width_um: 60.0,
            zoom_half_width_um: 15.0,
            nodes: 121,
            branch: BranchChoice::Clockwise,
        }
    }
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig {
            half_window_um: 60.0,
            samples: 601,
        }
    }
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            distances_um: vec![5.0, 8.0, 10.0, 12.0, 15.0, 20.0, 25.0, 30.0, 50.0, 100.0],
        }
    }
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        DynamicsConfig {
            half_width_um: 60.0,
            nodes: 1024,
            ramp_ms: 1000.0,
            shape: RampShape::Smoothstep,
            atom_number: 1,
            mean_field: false,
            radial_hz: [540.0, 540.0],
            omega_end_factor: 1.0,
            sample_every: 50,
            dt_us: None,
            snapshot_ms: vec![],
            fit: None,
        }
    }
}

impl Default for TofConfig {
    fn default() -> Self {
        TofConfig {
            expansion_ms: 10.0,
            conditioning: Conditioning::ALL.to_vec(),
            trials: 1000,
            distinguishability_n: vec![1, 1_000, 100_000, 1_000_000, 10_000_000],
        }
    }
}

fn config_error(key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{key}: {msg}"))
}

fn positive(key: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config_error(key, format!("must be > 0, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema != SCHEMA_VERSION {
            return Err(config_error(
                "schema",
                format!("expected {SCHEMA_VERSION}, got {}", self.schema),
            ));
        }
        let s = &self.species;
        positive("species.mass_kg", s.mass_kg)?;
        if !s.mf_gf.is_finite() || s.mf_gf == 0.0 {
            return Err(config_error("species.mf_gf", "must be non-zero"));
        }
        if !(s.scattering_length_nm >= 0.0 && s.scattering_length_nm.is_finite()) {
            return Err(config_error("species.scattering_length_nm", "must be >= 0"));
        }
        let c = &self.chip;
        for (k, v) in [
            ("chip.current_a", c.current_a),
            ("chip.central_bar_mm", c.central_bar_mm),
            ("chip.lead_length_mm", c.lead_length_mm),
            ("chip.x_bias_g", c.x_bias_g),
            ("chip.bottom_field_g", c.bottom_field_g),
            ("chip.guess_height_um", c.guess_height_um),
            ("chip.target_axial_hz", c.target_axial_hz),
            ("loop.radius_um", self.flux_loop.radius_um),
            ("loop.distance_um", self.flux_loop.distance_um),
            ("loop.wire_radius_um", self.flux_loop.wire_radius_um),
            (
                "loop.target_amplitude_mg",
                self.flux_loop.target_amplitude_mg,
            ),
            ("field.half_width_um", self.field.half_width_um),
            ("field.zoom_half_width_um", self.field.zoom_half_width_um),
            ("profile.half_window_um", self.profile.half_window_um),
            ("dynamics.half_width_um", self.dynamics.half_width_um),
            ("dynamics.omega_end_factor", self.dynamics.omega_end_factor),
            ("dynamics.radial_hz[0]", self.dynamics.radial_hz[0]),
            ("dynamics.radial_hz[1]", self.dynamics.radial_hz[1]),
        ] {
            positive(k, v)?;
        }
        if !(self.flux_loop.flux_fraction.is_finite()) {
            return Err(config_error("loop.flux_fraction", "must be finite"));
        }
        if self.field.nodes < 2 {
            return Err(config_error("field.nodes", "must be >= 2"));
        }
        if self.profile.samples < 101 {
            return Err(config_error("profile.samples", "must be >= 101"));
        }
        for (i, d) in self.sweep.distances_um.iter().enumerate() {
            positive(&format!("sweep.distances_um[{i}]"), *d)?;
        }
        let d = &self.dynamics;
        if d.nodes < 256 || !d.nodes.is_power_of_two() {
            return Err(config_error(
                "dynamics.nodes",
                "must be a power of two >= 256",
            ));
        }
        if !(d.ramp_ms >= 0.0 && d.ramp_ms.is_finite()) {
            return Err(config_error("dynamics.ramp_ms", "must be >= 0"));
        }
        if d.atom_number == 0 {
            return Err(config_error("dynamics.atom_number", "must be >= 1"));
        }
        if d.sample_every == 0 {
            return Err(config_error("dynamics.sample_every", "must be >= 1"));
        }
        if let Some(dt) = d.dt_us {
            positive("dynamics.dt_us", dt)?;
        }
        for (i, t) in d.snapshot_ms.iter().enumerate() {
            if !(*t >= 0.0 && t.is_finite()) {
                return Err(config_error(
                    &format!("dynamics.snapshot_ms[{i}]"),
                    "must be >= 0",
                ));
            }
        }
        if let Some(f) = d.fit {
            positive("dynamics.fit.sigma0", f.sigma0)?;
            positive("dynamics.fit.k0", f.k0)?;
            if !(f.b0.is_finite() && f.a.is_finite()) {
                return Err(config_error("dynamics.fit", "non-finite parameter"));
            }
        }
        if !(self.tof.expansion_ms >= 0.0 && self.tof.expansion_ms.is_finite()) {
            return Err(config_error("tof.expansion_ms", "must be >= 0"));
        }
        if self.tof.distinguishability_n.contains(&0) {
            return Err(config_error(
                "tof.distinguishability_n",
                "atom numbers must be >= 1",
            ));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, excluding the output directory.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir.clear();
        let canonical = serde_json::to_string(&c).expect("config serialises");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn species(&self) -> AtomSpecies {
        AtomSpecies {
            mass: self.species.mass_kg,
            mf_gf: self.species.mf_gf,
            scattering_length: self.species.scattering_length_nm * 1e-9,
        }
    }

    pub fn design(&self) -> TrapDesign {
        let c = &self.chip;
        let l = &self.flux_loop;
        TrapDesign {
            zwire: ZWire {
                current: c.current_a,
                central_bar: c.central_bar_mm * MILLIMETER,
                lead_length: c.lead_length_mm * MILLIMETER,
            },
            x_bias: c.x_bias_g * GAUSS,
            bottom_field: c.bottom_field_g * GAUSS,
            loop_radius: l.radius_um * MICROMETER,
            loop_distance: l.distance_um * MICROMETER,
            wire_radius: l.wire_radius_um * MICROMETER,
            flux_fraction: l.flux_fraction,
            loop_z_bias: l.z_bias,
            guess_height: c.guess_height_um * MICROMETER,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_default_matches_built_in() {
        let text = include_str!("../../../configs/default.json");
        let mut cfg = ExperimentConfig::from_json(text).unwrap();
        cfg.dynamics.snapshot_ms.clear();
        let d = SpeciesConfig::default();
        assert!((cfg.species.mass_kg / d.mass_kg - 1.0).abs() < 1e-12);
        assert!((cfg.species.scattering_length_nm / d.scattering_length_nm - 1.0).abs() < 1e-12);
        cfg.species = d;
        assert_eq!(cfg, ExperimentConfig::default());
    }

    #[test]
    fn empty_document_is_the_default() {
        assert_eq!(
            ExperimentConfig::from_json("{}").unwrap(),
            ExperimentConfig::default()
        );
    }

    #[test]
    fn hash_ignores_output_dir_only() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.output_dir = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.seed = 7;
        assert_ne!(a.hash(), b.hash());
    }
}
