use serde::{Deserialize, Serialize};

use super::{CircularLoop, FiniteSegment};
use crate::{Error, Result, Vec3};

/// Spatially uniform field, T.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformBias {
    field: Vec3,
}

impl UniformBias {
    pub fn new(field: Vec3) -> Result<Self> {
        if !field.is_finite() {
            return Err(Error::InvalidGeometry("non-finite bias field".into()));
        }
        Ok(UniformBias { field })
    }

    pub fn field(&self) -> Vec3 {
        self.field
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FieldSource {
    Segment(FiniteSegment),
    Loop(CircularLoop),
    Bias(UniformBias),
}

impl FieldSource {
    pub fn field(&self, p: Vec3) -> Result<Vec3> {
        match self {
            FieldSource::Segment(s) => s.field(p),
            FieldSource::Loop(l) => l.field(p),
            FieldSource::Bias(b) => Ok(b.field()),
        }
    }

    /// Same source with its current (or bias field) multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<FieldSource> {
        Ok(match self {
            FieldSource::Segment(s) => FieldSource::Segment(s.with_current(s.current() * factor)?),
            FieldSource::Loop(l) => FieldSource::Loop(l.with_current(l.current() * factor)),
            FieldSource::Bias(b) => FieldSource::Bias(UniformBias::new(b.field() * factor)?),
        })
    }

    pub fn is_bias(&self) -> bool {
        matches!(self, FieldSource::Bias(_))
    }
}

impl From<FiniteSegment> for FieldSource {
    fn from(s: FiniteSegment) -> Self {
        FieldSource::Segment(s)
    }
}

impl From<CircularLoop> for FieldSource {
    fn from(l: CircularLoop) -> Self {
        FieldSource::Loop(l)
    }
}

impl From<UniformBias> for FieldSource {
    fn from(b: UniformBias) -> Self {
        FieldSource::Bias(b)
    }
}

/// Ordered, non-empty list of sources whose fields superpose linearly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceAssembly {
    sources: Vec<FieldSource>,
}

impl SourceAssembly {
    pub fn new(sources: Vec<FieldSource>) -> Result<Self> {
        if sources.is_empty() {
            return Err(Error::InvalidGeometry("source assembly is empty".into()));
        }
        Ok(SourceAssembly { sources })
    }

    pub fn sources(&self) -> &[FieldSource] {
        &self.sources
    }

    pub fn push(&mut self, source: impl Into<FieldSource>) {
        self.sources.push(source.into());
    }

    pub fn with(&self, source: impl Into<FieldSource>) -> SourceAssembly {
        let mut out = self.clone();
        out.push(source);
        out
    }

    /// Union of two assemblies, `self` first.
    pub fn union(&self, other: &SourceAssembly) -> SourceAssembly {
        let mut sources = self.sources.clone();
        sources.extend_from_slice(&other.sources);
        SourceAssembly { sources }
    }

    /// Every current and bias multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<SourceAssembly> {
        let sources = self
            .sources
            .iter()
            .map(|s| s.scaled(factor))
            .collect::<Result<_>>()?;
        Ok(SourceAssembly { sources })
    }

    /// Superposed field; errors carry the index of the failing source.
    pub fn total_field(&self, p: Vec3) -> Result<Vec3> {
        let mut b = Vec3::ZERO;
        for (i, s) in self.sources.iter().enumerate() {
            b += s.field(p).map_err(|e| e.at_source(i))?;
        }
        Ok(b)
    }

    pub fn intensity(&self, p: Vec3) -> Result<f64> {
        self.total_field(p).map(Vec3::norm)
    }
}

/// Z-shaped wire: central bar along y centred on the origin in the z = 0
/// plane, leads along ±x. Current enters on the +x lead at y = +L/2, runs
/// down the bar towards −y and leaves along −x at y = −L/2, so the bar field
/// above the chip points along −x and the lead fields add along +y.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZWire {
    pub current: f64,
    pub central_bar: f64,
    pub lead_length: f64,
}

impl ZWire {
    pub fn segments(&self) -> Result<[FiniteSegment; 3]> {
        if !(self.central_bar > 0.0 && self.lead_length > 0.0) {
            return Err(Error::InvalidGeometry(
                "Z-wire lengths must be positive".into(),
            ));
        }
        let h = 0.5 * self.central_bar;
        let l = self.lead_length;
        let a = Vec3::new(l, h, 0.0);
        let b = Vec3::new(0.0, h, 0.0);
        let c = Vec3::new(0.0, -h, 0.0);
        let d = Vec3::new(-l, -h, 0.0);
        Ok([
            FiniteSegment::new(a, b, self.current)?,
            FiniteSegment::new(b, c, self.current)?,
            FiniteSegment::new(c, d, self.current)?,
        ])
    }

    pub fn sources(&self) -> Result<Vec<FieldSource>> {
        Ok(self
            .segments()?
            .into_iter()
            .map(FieldSource::from)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::GAUSS;

    fn zwire() -> ZWire {
        ZWire {
            current: 5.0,
            central_bar: 5e-3,
            lead_length: 50e-3,
        }
    }

    #[test]
    fn bias_only_is_identity() {
        let a = SourceAssembly::new(vec![UniformBias::new(Vec3::new(20.0 * GAUSS, 0.0, 0.0))
            .unwrap()
            .into()])
        .unwrap();
        for p in [Vec3::ZERO, Vec3::new(1.0, -2.0, 3.0)] {
            assert_eq!(a.total_field(p).unwrap(), Vec3::new(20.0 * GAUSS, 0.0, 0.0));
        }
        assert!(SourceAssembly::new(vec![]).is_err());
    }

    #[test]
    fn doubling_currents_doubles_non_bias_part() {
        let bias = UniformBias::new(Vec3::new(20.0 * GAUSS, 0.3 * GAUSS, 0.0)).unwrap();
        let mut a = SourceAssembly::new(zwire().sources().unwrap()).unwrap();
        let lp = CircularLoop::new(Vec3::new(0.0, 0.0, 480e-6), Vec3::Z, 5e-6, -5e-5).unwrap();
        a.push(lp);
        let with_bias = a.with(bias);
        let doubled = a.scaled(2.0).unwrap().with(bias);
        let p = Vec3::new(3e-6, -7e-6, 490e-6);
        let b1 = with_bias.total_field(p).unwrap() - bias.field();
        let b2 = doubled.total_field(p).unwrap() - bias.field();
        assert!((b2 - b1 * 2.0).norm() <= 1e-14 * b1.norm());
    }

    #[test]
    fn superposition_of_union() {
        let a = SourceAssembly::new(zwire().sources().unwrap()).unwrap();
        let b = SourceAssembly::new(vec![CircularLoop::new(
            Vec3::new(0.0, 0.0, 480e-6),
            Vec3::Z,
            5e-6,
            5e-5,
        )
        .unwrap()
        .into()])
        .unwrap();
        let p = Vec3::new(1e-6, 4e-6, 491e-6);
        let sum = a.total_field(p).unwrap() + b.total_field(p).unwrap();
        let joint = a.union(&b).total_field(p).unwrap();
        assert!((sum - joint).norm() <= 1e-14 * joint.norm());
    }

    #[test]
    fn error_reports_source_index() {
        let a = SourceAssembly::new(zwire().sources().unwrap()).unwrap();
        // on the central bar (index 1)
        let err = a.total_field(Vec3::new(0.0, 1e-3, 0.0)).unwrap_err();
        assert!(matches!(err, Error::Source { index: 1, .. }), "{err:?}");
    }

    #[test]
    fn zwire_bar_field_points_along_minus_x() {
        let a = SourceAssembly::new(zwire().sources().unwrap()).unwrap();
        let b = a.total_field(Vec3::new(0.0, 0.0, 500e-6)).unwrap();
        assert!(b.x < 0.0 && b.y > 0.0);
        assert!(b.z.abs() < 1e-12);
    }
}
