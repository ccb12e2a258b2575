//! Impact location on the racket face from the rear view.

mod ellipse;
mod regions;
mod shaft;

pub use ellipse::{
    conic_to_params, fit_ellipse, fit_ellipse_trimmed, normalize_axis_angle, EllipseError,
    EllipseParams,
};
pub use regions::{
    drop_isolated, extract_candidates, row_extremes, split_face_shaft, FaceShaft, Pixel, Region,
    SplitConfig,
};
pub use shaft::{angle_from_vertical, fit_shaft, RansacConfig, ShaftLine};

use serde::{Deserialize, Serialize};

use crate::calibration::Calibration;
use crate::events::{
    accumulate, packet_floor, EventStream, PolarityFilter, PolarityImage, PACKET_US,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocationStatus {
    Success,
    TipOutsideFace,
    ShaftAngleInvalid,
    FaceNotFound,
}

impl LocationStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Success => "success",
            Self::TipOutsideFace => "tip_outside_face",
            Self::ShaftAngleInvalid => "shaft_angle_invalid",
            Self::FaceNotFound => "face_not_found",
        }
    }
}

/// Impact position in the racket-face frame, mm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaceCoordinates {
    /// Along the minor axis, positive to the image right.
    pub u: f64,
    /// Along the major axis, positive toward the racket head.
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationResult {
    pub status: LocationStatus,
    pub coords: Option<FaceCoordinates>,
    pub ellipse: Option<EllipseParams>,
    pub shaft: Option<ShaftLine>,
    pub tip: Option<[u16; 2]>,
    pub tilt_corrected: bool,
    pub rear_mm_per_px: Option<f64>,
    pub detail: Option<String>,
}

impl LocationResult {
    fn failed(status: LocationStatus, detail: impl Into<String>) -> Self {
        Self {
            status,
            coords: None,
            ellipse: None,
            shaft: None,
            tip: None,
            tilt_corrected: false,
            rear_mm_per_px: None,
            detail: Some(detail.into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LocateConfig {
    pub min_area_px: usize,
    pub upper_fraction: f64,
    pub extent_ratio: f64,
    pub min_face_rows: usize,
    pub min_face_width_px: f64,
    pub ransac_iters: usize,
    pub ransac_tol_px: f64,
    pub ransac_seed: u64,
    pub max_shaft_deg: f64,
    pub min_shaft_inlier_ratio: f64,
    /// Shafts with fewer pixels are treated as absent.
    pub min_shaft_points: usize,
    /// Boundary points farther than this from the first fit are dropped.
    pub ellipse_trim_px: f64,
    /// The tip must lie this far inside the fitted outline, px.
    pub rim_margin_px: f64,
    /// Tip candidates need another positive pixel within this Chebyshev
    /// distance; 0 keeps every pixel.
    pub isolation_radius_px: u16,
    /// Report the midpoint of the tip row's pixels within this many px of
    /// the tip pixel instead of the tie-broken pixel; 0 disables.
    pub tip_row_window_px: f64,
}

impl Default for LocateConfig {
    fn default() -> Self {
        Self {
            min_area_px: 50,
            upper_fraction: 0.6,
            extent_ratio: 0.4,
            min_face_rows: 10,
            min_face_width_px: 20.0,
            ransac_iters: 200,
            ransac_tol_px: 2.0,
            ransac_seed: 0,
            max_shaft_deg: 60.0,
            min_shaft_inlier_ratio: 0.3,
            min_shaft_points: 10,
            ellipse_trim_px: 2.5,
            rim_margin_px: 4.0,
            isolation_radius_px: 2,
            tip_row_window_px: 10.0,
        }
    }
}

impl LocateConfig {
    pub fn validate(&self) -> crate::Result<()> {
        let ok = self.upper_fraction > 0.0
            && self.upper_fraction <= 1.0
            && self.extent_ratio > 0.0
            && self.extent_ratio <= 1.0
            && self.ransac_iters > 0
            && self.ransac_tol_px > 0.0
            && self.max_shaft_deg > 0.0
            && self.max_shaft_deg <= 90.0
            && (0.0..=1.0).contains(&self.min_shaft_inlier_ratio)
            && self.ellipse_trim_px > 0.0
            && self.rim_margin_px >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(crate::Error::Config(format!(
                "invalid [locate] section: {self:?}"
            )))
        }
    }

    fn split(&self) -> SplitConfig {
        SplitConfig {
            extent_ratio: self.extent_ratio,
            min_face_rows: self.min_face_rows,
            min_face_width_px: self.min_face_width_px,
            ..SplitConfig::default()
        }
    }

    fn ransac(&self) -> RansacConfig {
        RansacConfig {
            iterations: self.ransac_iters,
            tolerance_px: self.ransac_tol_px,
            seed: self.ransac_seed,
        }
    }
}

/// Start time of the packet whose half-open window holds `t_impact`, or
/// `None` when `t_impact` is outside the stream's time range.
pub fn select_impact_packet(stream: &EventStream, t_impact: i64) -> Option<i64> {
    let (t0, t1) = stream.time_range()?;
    if t_impact < packet_floor(t0) || t_impact >= packet_floor(t1) + PACKET_US {
        return None;
    }
    Some(packet_floor(t_impact))
}

/// Replaces the ellipse tilt with the shaft angle. Returns the ellipse
/// unchanged and `false` without a shaft, and `Err` when the shaft leans
/// more than `max_shaft_rad` from vertical.
pub fn correct_tilt(
    ellipse: &EllipseParams,
    shaft: Option<&ShaftLine>,
    max_shaft_rad: f64,
) -> Result<(EllipseParams, bool), LocationStatus> {
    match shaft {
        None => Ok((*ellipse, false)),
        Some(s) if s.phi.abs() > max_shaft_rad => Err(LocationStatus::ShaftAngleInvalid),
        Some(s) => Ok((
            EllipseParams {
                theta: s.phi,
                ..*ellipse
            },
            true,
        )),
    }
}

/// Lowest positive pixel strictly inside the ellipse shrunk by `margin`.
/// Ties go to the pixel closest to the major axis line (smallest |u|),
/// then to the smaller x.
pub fn find_tip(pixels: &[Pixel], ellipse: &EllipseParams, margin: f64) -> Option<Pixel> {
    pixels
        .iter()
        .copied()
        .filter(|&(x, y)| ellipse.contains_with_margin(x as f64, y as f64, margin))
        .min_by(|&a, &b| {
            let ua = ellipse.local(a.0 as f64, a.1 as f64).0.abs();
            let ub = ellipse.local(b.0 as f64, b.1 as f64).0.abs();
            b.1.cmp(&a.1).then(ua.total_cmp(&ub)).then(a.0.cmp(&b.0))
        })
}

/// Midpoint of the extreme pixels on the tip's row within `window` px of
/// the tip. A falling cork covers the two ends of a chord in the lowest
/// row, so the midpoint sits on the cork axis.
pub fn tip_row_centre(pixels: &[Pixel], tip: Pixel, window: f64) -> (f64, f64) {
    let (lo, hi) = pixels
        .iter()
        .filter(|p| p.1 == tip.1 && (p.0 as f64 - tip.0 as f64).abs() <= window)
        .fold((tip.0, tip.0), |(lo, hi), p| (lo.min(p.0), hi.max(p.0)));
    (0.5 * (lo as f64 + hi as f64), tip.1 as f64)
}

/// Projects the tip onto the ellipse axes and scales to mm.
pub fn to_face_coords(tip: (f64, f64), ellipse: &EllipseParams, mm_per_px: f64) -> FaceCoordinates {
    let (u, v) = ellipse.local(tip.0, tip.1);
    FaceCoordinates {
        u: u * mm_per_px,
        v: v * mm_per_px,
    }
}

/// Positive-polarity image of the packet holding `t_impact`.
pub fn impact_image(stream: &EventStream, t_impact: i64) -> Option<PolarityImage> {
    let start = select_impact_packet(stream, t_impact)?;
    accumulate(stream, start, PACKET_US, Some(PolarityFilter::Positive)).ok()
}

/// Full rear-view chain from the impact time to face coordinates.
pub fn locate_impact(
    stream: &EventStream,
    t_impact: i64,
    cal: &Calibration,
    cfg: &LocateConfig,
) -> LocationResult {
    use LocationStatus::*;

    let Some(image) = impact_image(stream, t_impact) else {
        return LocationResult::failed(FaceNotFound, "impact time outside rear stream");
    };
    let candidates = extract_candidates(&image, cfg.min_area_px, cfg.upper_fraction);
    if candidates.is_empty() {
        return LocationResult::failed(FaceNotFound, "no candidate regions");
    }
    let Some(split) = split_face_shaft(&candidates, &cfg.split()) else {
        return LocationResult::failed(FaceNotFound, "no face band");
    };

    let shaft_points: Vec<(f64, f64)> = split
        .shaft
        .iter()
        .map(|&(x, y)| (x as f64, y as f64))
        .collect();
    let shaft = if shaft_points.len() >= cfg.min_shaft_points {
        fit_shaft(&shaft_points, &cfg.ransac())
    } else {
        None
    };
    let mut result = LocationResult::failed(FaceNotFound, "");
    result.detail = None;
    result.shaft = shaft;
    if let Some(s) = &shaft {
        if s.inlier_ratio < cfg.min_shaft_inlier_ratio {
            result.status = ShaftAngleInvalid;
            result.detail = Some(format!("shaft inlier ratio {:.2}", s.inlier_ratio));
            return result;
        }
        if s.phi.abs() > cfg.max_shaft_deg.to_radians() {
            result.status = ShaftAngleInvalid;
            result.detail = Some(format!("shaft at {:.1} deg", s.phi.to_degrees()));
            return result;
        }
    }

    let boundary = row_extremes(&split.face);
    let fitted = match fit_ellipse_trimmed(&boundary, cfg.ellipse_trim_px) {
        Ok(e) => e,
        Err(e) => {
            result.detail = Some(format!("ellipse fit: {e}"));
            return result;
        }
    };
    result.ellipse = Some(fitted);
    let (ellipse, corrected) =
        match correct_tilt(&fitted, shaft.as_ref(), cfg.max_shaft_deg.to_radians()) {
            Ok(v) => v,
            Err(status) => {
                result.status = status;
                result.detail = Some(format!(
                    "shaft at {:.1} deg",
                    shaft.map_or(0.0, |s| s.phi.to_degrees())
                ));
                return result;
            }
        };
    result.ellipse = Some(ellipse);
    result.tilt_corrected = corrected;

    let mm_per_px = match cal.rear_mm_per_px {
        Some(s) => s,
        None => match cal.rear_from_outline(2.0 * ellipse.a, 2.0 * ellipse.b) {
            Ok(s) => s,
            Err(e) => {
                result.detail = Some(e.to_string());
                return result;
            }
        },
    };
    result.rear_mm_per_px = Some(mm_per_px);

    let all = image.positive_pixels();
    let pixels = if cfg.isolation_radius_px > 0 {
        drop_isolated(&all, cfg.isolation_radius_px)
    } else {
        all.clone()
    };
    let Some(tip) = find_tip(&pixels, &ellipse, cfg.rim_margin_px) else {
        result.status = TipOutsideFace;
        result.detail = Some("no positive pixel inside the face".into());
        return result;
    };
    result.tip = Some([tip.0, tip.1]);
    let point = if cfg.tip_row_window_px > 0.0 {
        // chord ends are often lone pixels, so the unfiltered set is used
        let inside: Vec<Pixel> = all
            .iter()
            .copied()
            .filter(|&(x, y)| ellipse.contains_with_margin(x as f64, y as f64, cfg.rim_margin_px))
            .collect();
        tip_row_centre(&inside, tip, cfg.tip_row_window_px)
    } else {
        (tip.0 as f64, tip.1 as f64)
    };
    result.coords = Some(to_face_coords(point, &ellipse, mm_per_px));
    result.status = Success;
    result
}
