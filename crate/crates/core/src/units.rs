//! Conversions between SI and the lab units used in reports and CSV files.

pub const GAUSS: f64 = 1e-4;
pub const MILLIGAUSS: f64 = 1e-7;
pub const MICROMETER: f64 = 1e-6;
pub const MILLIMETER: f64 = 1e-3;
pub const MILLISECOND: f64 = 1e-3;

#[inline]
pub fn tesla_to_gauss(b: f64) -> f64 {
    b / GAUSS
}

#[inline]
pub fn tesla_to_mg(b: f64) -> f64 {
    b / MILLIGAUSS
}

#[inline]
pub fn mg_to_tesla(b: f64) -> f64 {
    b * MILLIGAUSS
}

#[inline]
pub fn gauss_to_tesla(b: f64) -> f64 {
    b * GAUSS
}

#[inline]
pub fn m_to_um(x: f64) -> f64 {
    x / MICROMETER
}

#[inline]
pub fn um_to_m(x: f64) -> f64 {
    x * MICROMETER
}

#[inline]
pub fn s_to_ms(t: f64) -> f64 {
    t / MILLISECOND
}

#[inline]
pub fn ms_to_s(t: f64) -> f64 {
    t * MILLISECOND
}

/// Format with nine significant digits, the precision used by every CSV export.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    format!("{x:.8e}")
}
