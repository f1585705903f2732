use serde::{Deserialize, Serialize};

use crate::constants::{GEOMETRY_EPSILON, MU0_OVER_4PI, SEGMENT_CURRENT_GUARD};
use crate::{Error, Result, Vec3};

/// Straight current filament from `start` to `end`; positive current flows
/// start → end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteSegment {
    start: Vec3,
    end: Vec3,
    current: f64,
}

impl FiniteSegment {
    pub fn new(start: Vec3, end: Vec3, current: f64) -> Result<Self> {
        if !start.is_finite() || !end.is_finite() || !current.is_finite() {
            return Err(Error::InvalidGeometry("non-finite segment".into()));
        }
        if (end - start).norm() == 0.0 {
            return Err(Error::InvalidGeometry("segment start equals end".into()));
        }
        if current.abs() >= SEGMENT_CURRENT_GUARD {
            return Err(Error::InvalidGeometry(format!(
                "segment current {current} A exceeds guard {SEGMENT_CURRENT_GUARD} A"
            )));
        }
        Ok(FiniteSegment {
            start,
            end,
            current,
        })
    }

    pub fn start(&self) -> Vec3 {
        self.start
    }

    pub fn end(&self) -> Vec3 {
        self.end
    }

    pub fn current(&self) -> f64 {
        self.current
    }

    pub fn with_current(&self, current: f64) -> Result<Self> {
        FiniteSegment::new(self.start, self.end, current)
    }

    /// Distance from `p` to the closest point of the segment.
    pub fn distance_to(&self, p: Vec3) -> f64 {
        let d = self.end - self.start;
        let t = ((p - self.start).dot(d) / d.norm_squared()).clamp(0.0, 1.0);
        (p - (self.start + d * t)).norm()
    }

    /// Closed-form Biot–Savart field of the finite segment.
    pub fn field(&self, p: Vec3) -> Result<Vec3> {
        let dist = self.distance_to(p);
        if dist < GEOMETRY_EPSILON {
            return Err(Error::EvaluationTooCloseToConductor {
                distance: dist,
                limit: GEOMETRY_EPSILON,
            });
        }
        if self.current == 0.0 {
            return Ok(Vec3::ZERO);
        }
        let u = (self.end - self.start) / (self.end - self.start).norm();
        let r1 = p - self.start;
        let r2 = p - self.end;
        let perp = u.cross(r1);
        let rho2 = perp.norm_squared();
        // on the line's extension beyond the ends the field vanishes
        if rho2 <= (1e-14 * r1.norm()).powi(2) {
            return Ok(Vec3::ZERO);
        }
        let cos_diff = u.dot(r1) / r1.norm() - u.dot(r2) / r2.norm();
        Ok(perp * (MU0_OVER_4PI * self.current * cos_diff / rho2))
    }
}
