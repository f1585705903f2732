use serde::{Deserialize, Serialize};

use super::elliptic::{complete_elliptic, loop_radial_bracket};
use crate::constants::{GEOMETRY_EPSILON, MU0};
use crate::{Error, Result, Vec3};

/// Circular current filament. Positive current circulates right-handed about
/// `normal`; seen from the tip of `normal` that is anticlockwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircularLoop {
    center: Vec3,
    normal: Vec3,
    radius: f64,
    current: f64,
}

impl CircularLoop {
    pub fn new(center: Vec3, normal: Vec3, radius: f64, current: f64) -> Result<Self> {
        if !center.is_finite() || !current.is_finite() {
            return Err(Error::InvalidGeometry("non-finite loop".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidGeometry(format!(
                "loop radius {radius} must be > 0"
            )));
        }
        let normal = normal
            .normalized()
            .ok_or_else(|| Error::InvalidGeometry("loop normal is zero".into()))?;
        Ok(CircularLoop {
            center,
            normal,
            radius,
            current,
        })
    }

    pub fn center(&self) -> Vec3 {
        self.center
    }

    pub fn normal(&self) -> Vec3 {
        self.normal
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn current(&self) -> f64 {
        self.current
    }

    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.radius * self.radius
    }

    pub fn with_current(&self, current: f64) -> Self {
        CircularLoop { current, ..*self }
    }

    pub fn with_center(&self, center: Vec3) -> Self {
        CircularLoop { center, ..*self }
    }

    /// Field at `p` from the elliptic-integral closed form in the loop frame.
    pub fn field(&self, p: Vec3) -> Result<Vec3> {
        let r = p - self.center;
        let z = r.dot(self.normal);
        let rho_vec = r - self.normal * z;
        let rho = rho_vec.norm();
        let big_r = self.radius;

        let alpha2 = (big_r - rho).powi(2) + z * z;
        let filament_distance = alpha2.sqrt();
        if filament_distance < GEOMETRY_EPSILON {
            return Err(Error::EvaluationTooCloseToConductor {
                distance: filament_distance,
                limit: GEOMETRY_EPSILON,
            });
        }
        if self.current == 0.0 {
            return Ok(Vec3::ZERO);
        }
        let beta2 = (big_r + rho).powi(2) + z * z;
        let beta = beta2.sqrt();
        let m = 4.0 * big_r * rho / beta2;

        let ell = complete_elliptic(m)?;
        let q = loop_radial_bracket(m)?;
        let c = MU0 * self.current / std::f64::consts::PI;

        let b_axial = c * (2.0 * big_r * big_r * ell.e - beta2 * q) / (2.0 * alpha2 * beta);
        let b_radial = if rho > 0.0 {
            c * z * beta * q / (2.0 * alpha2 * rho)
        } else {
            0.0
        };
        let rho_hat = if rho > 0.0 { rho_vec / rho } else { Vec3::ZERO };
        Ok(self.normal * b_axial + rho_hat * b_radial)
    }
}

/// On-axis closed form `μ₀IR²/2(R²+z²)^{3/2}`.
pub fn on_axis_field(radius: f64, current: f64, z: f64) -> f64 {
    MU0 * current * radius * radius / (2.0 * (radius * radius + z * z).powf(1.5))
}
