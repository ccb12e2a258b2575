//! Pixel-to-millimetre scales and racket face dimensions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lateral-view scale of the reference setup, mm per pixel.
pub const LATERAL_MM_PER_PX: f64 = 3.47;
/// Typical rear-view scale, mm per pixel.
pub const REAR_MM_PER_PX: f64 = 1.86;
/// Inner frame width of the racket face (medio-lateral), mm.
pub const FACE_INNER_ML_MM: f64 = 184.0;
/// Inner frame length of the racket face (longitudinal), mm.
pub const FACE_INNER_LONG_MM: f64 = 240.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Calibration {
    #[serde(default = "default_lateral")]
    pub lateral_mm_per_px: f64,
    /// When absent, estimated per trial from the fitted racket outline.
    #[serde(default)]
    pub rear_mm_per_px: Option<f64>,
    #[serde(default = "default_ml")]
    pub face_inner_ml: f64,
    #[serde(default = "default_long")]
    pub face_inner_long: f64,
}

fn default_lateral() -> f64 {
    LATERAL_MM_PER_PX
}
fn default_ml() -> f64 {
    FACE_INNER_ML_MM
}
fn default_long() -> f64 {
    FACE_INNER_LONG_MM
}

impl Default for Calibration {
    fn default() -> Self {
        Self {
            lateral_mm_per_px: LATERAL_MM_PER_PX,
            rear_mm_per_px: None,
            face_inner_ml: FACE_INNER_ML_MM,
            face_inner_long: FACE_INNER_LONG_MM,
        }
    }
}

impl Calibration {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.lateral_mm_per_px) || !self.rear_mm_per_px.is_none_or(positive) {
            return Err(Error::Invalid("calibration scales must be positive".into()));
        }
        if !positive(self.face_inner_ml) || !positive(self.face_inner_long) {
            return Err(Error::Invalid("face dimensions must be positive".into()));
        }
        Ok(())
    }

    /// Rear scale from a fitted inner-frame outline using this calibration's
    /// face dimensions.
    pub fn rear_from_outline(&self, major_axis_px: f64, minor_axis_px: f64) -> Result<f64> {
        scale_from_axes(
            major_axis_px,
            minor_axis_px,
            self.face_inner_long,
            self.face_inner_ml,
        )
    }
}

/// Rear-view mm/px from the full major and minor axis lengths of the fitted
/// inner frame, averaging the longitudinal and medio-lateral estimates.
pub fn rear_calibration_from_ellipse(major_axis_px: f64, minor_axis_px: f64) -> Result<f64> {
    scale_from_axes(
        major_axis_px,
        minor_axis_px,
        FACE_INNER_LONG_MM,
        FACE_INNER_ML_MM,
    )
}

fn scale_from_axes(major_px: f64, minor_px: f64, long_mm: f64, ml_mm: f64) -> Result<f64> {
    if !(major_px > 0.0 && minor_px > 0.0) || !major_px.is_finite() || !minor_px.is_finite() {
        return Err(Error::Invalid(format!(
            "axis lengths must be positive, got {major_px} and {minor_px}"
        )));
    }
    Ok(0.5 * (long_mm / major_px + ml_mm / minor_px))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_rear_scale() {
        // 240 / 129.03 = 1.86003, 184 / 98.92 = 1.86009
        let s = rear_calibration_from_ellipse(129.03, 98.92).unwrap();
        assert!((s - 1.86006).abs() < 1e-4, "{s}");
    }

    #[test]
    fn unit_and_double_scale() {
        assert_eq!(rear_calibration_from_ellipse(240.0, 184.0).unwrap(), 1.0);
        assert_eq!(rear_calibration_from_ellipse(480.0, 368.0).unwrap(), 0.5);
    }

    #[test]
    fn rejects_non_positive_axes() {
        assert!(rear_calibration_from_ellipse(0.0, 10.0).is_err());
        assert!(rear_calibration_from_ellipse(10.0, -1.0).is_err());
        assert!(rear_calibration_from_ellipse(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn doubling_axes_halves_scale() {
        for &(a, b) in &[(100.0, 80.0), (130.5, 97.2), (3.0, 2.5)] {
            let s1 = rear_calibration_from_ellipse(a, b).unwrap();
            let s2 = rear_calibration_from_ellipse(2.0 * a, 2.0 * b).unwrap();
            assert!((s1 - 2.0 * s2).abs() < 1e-12);
        }
    }

    #[test]
    fn validation() {
        assert!(Calibration::default().validate().is_ok());
        let bad = Calibration {
            lateral_mm_per_px: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
