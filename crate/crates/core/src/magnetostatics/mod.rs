//! Static magnetic fields of the chip: Z-wire segments, the superconducting
//! loop and uniform biases.

mod assembly;
mod circular;
pub mod elliptic;
mod grid;
mod segment;

pub use assembly::{FieldSource, SourceAssembly, UniformBias, ZWire};
pub use circular::{on_axis_field, CircularLoop};
pub use grid::{divergence_probe, field_grid, FieldMap, GridSpec};
pub use segment::FiniteSegment;
