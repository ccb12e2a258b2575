//! Outbound shuttlecock speed from two short lateral-view windows.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::calibration::Calibration;
use crate::cluster;
use crate::events::{accumulate, EventStream, PolarityFilter, PolarityImage};
use crate::impact_time::ImpactTime;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpeedConfig {
    pub offset1_ms: f64,
    pub offset2_ms: f64,
    pub accum_ms: f64,
    pub gate_px: f64,
    /// Refine the tip with a regression of the leading edge over time.
    pub subpixel: bool,
    /// Sub-window width for the leading-edge regression, µs.
    pub front_bin_us: i64,
    /// Edge samples farther than this from the first line are dropped, px.
    pub front_reject_px: f64,
    /// Pixels within this Chebyshev distance form one blob.
    pub blob_link_px: i32,
    /// Blobs smaller than this are treated as noise; 0 searches every
    /// positive pixel in the gate.
    pub min_blob_px: usize,
    /// Events used for the edge regression lie within this distance of the
    /// pixel tip, px.
    pub front_radius_px: f64,
}

impl Default for SpeedConfig {
    fn default() -> Self {
        Self {
            offset1_ms: 30.0,
            offset2_ms: 32.0,
            accum_ms: 1.0,
            gate_px: 80.0,
            subpixel: true,
            front_bin_us: 100,
            front_reject_px: 3.0,
            blob_link_px: 2,
            min_blob_px: 8,
            front_radius_px: 15.0,
        }
    }
}

impl SpeedConfig {
    pub fn validate(&self) -> crate::Result<()> {
        let ok = self.offset2_ms > self.offset1_ms
            && self.offset1_ms >= 0.0
            && self.accum_ms > 0.0
            && self.gate_px > 0.0
            && self.front_bin_us > 0
            && self.front_reject_px > 0.0
            && self.blob_link_px >= 1
            && self.front_radius_px > 0.0;
        if ok {
            Ok(())
        } else {
            Err(crate::Error::Config(format!(
                "invalid [speed] section: {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedResult {
    /// m/s
    pub speed: f64,
    /// Tip positions used for the displacement, px.
    pub tip_30: [f64; 2],
    pub tip_32: [f64; 2],
    /// Extremal pixels before refinement.
    pub pixel_tips: [[u16; 2]; 2],
    pub displacement_px: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SpeedFailure {
    #[error("tip not found at +{offset_ms} ms")]
    TipNotFound { offset_ms: f64 },
    #[error("no outbound flight direction")]
    NoDirection,
}

/// Speed in m/s of a `displacement_px` move over `dt_ms`.
pub fn speed_from_displacement(displacement_px: f64, mm_per_px: f64, dt_ms: f64) -> f64 {
    // mm per ms is m per s
    displacement_px * mm_per_px / dt_ms
}

fn unit(d: [f64; 2]) -> Option<[f64; 2]> {
    let n = d[0].hypot(d[1]);
    (n > 0.0 && n.is_finite()).then(|| [d[0] / n, d[1] / n])
}

/// Positive pixel within `gate_px` of `predicted` with the largest
/// projection onto `direction`. Ties go to the pixel nearer the
/// prediction, then to the smaller (y, x).
pub fn tip_in_frame(
    image: &PolarityImage,
    predicted: [f64; 2],
    gate_px: f64,
    direction: [f64; 2],
) -> Option<(u16, u16)> {
    leading_pixel(&image.positive_pixels(), predicted, gate_px, direction)
}

fn leading_pixel(
    pixels: &[(u16, u16)],
    predicted: [f64; 2],
    gate_px: f64,
    direction: [f64; 2],
) -> Option<(u16, u16)> {
    let d = unit(direction)?;
    let key = |&(x, y): &(u16, u16)| {
        let (dx, dy) = (x as f64 - predicted[0], y as f64 - predicted[1]);
        (dx * d[0] + dy * d[1], dx.hypot(dy))
    };
    pixels
        .iter()
        .copied()
        .filter(|p| key(p).1 <= gate_px)
        .max_by(|a, b| {
            let (ka, kb) = (key(a), key(b));
            ka.0.total_cmp(&kb.0)
                .then(kb.1.total_cmp(&ka.1))
                .then((b.1, b.0).cmp(&(a.1, a.0)))
        })
}

/// Pixels of the blob nearest `predicted` among the gated positive pixels
/// with at least `min_px` members.
fn shuttle_blob(image: &PolarityImage, predicted: [f64; 2], cfg: &SpeedConfig) -> Vec<(u16, u16)> {
    let gated: Vec<(u16, u16)> = image
        .positive_pixels()
        .into_iter()
        .filter(|&(x, y)| (x as f64 - predicted[0]).hypot(y as f64 - predicted[1]) <= cfg.gate_px)
        .collect();
    if cfg.min_blob_px == 0 {
        return gated;
    }
    let coords: Vec<(i32, i32)> = gated.iter().map(|&(x, y)| (x as i32, y as i32)).collect();
    let dist =
        |&i: &usize| (gated[i].0 as f64 - predicted[0]).hypot(gated[i].1 as f64 - predicted[1]);
    cluster::components(&coords, cfg.blob_link_px)
        .into_iter()
        .filter(|m| m.len() >= cfg.min_blob_px)
        .min_by(|a, b| {
            let da = a.iter().map(dist).fold(f64::INFINITY, f64::min);
            let db = b.iter().map(dist).fold(f64::INFINITY, f64::min);
            da.total_cmp(&db)
        })
        .map(|m| m.into_iter().map(|i| gated[i]).collect())
        .unwrap_or_default()
}

/// Leading-edge projection at the window midpoint, from a line fitted to
/// the per-sub-window maxima. `None` with fewer than three usable samples.
fn front_at_midpoint(
    stream: &EventStream,
    t0: i64,
    t1: i64,
    tip: [f64; 2],
    d: [f64; 2],
    cfg: &SpeedConfig,
) -> Option<f64> {
    let mut fronts: BTreeMap<i64, (f64, usize)> = BTreeMap::new();
    for e in stream.window(t0, t1).iter().filter(|e| e.p > 0) {
        let (dx, dy) = (e.x as f64 - tip[0], e.y as f64 - tip[1]);
        if dx.hypot(dy) > cfg.front_radius_px {
            continue;
        }
        let proj = dx * d[0] + dy * d[1];
        let bin = (e.t - t0).div_euclid(cfg.front_bin_us);
        let slot = fronts.entry(bin).or_insert((f64::NEG_INFINITY, 0));
        slot.0 = slot.0.max(proj);
        slot.1 += 1;
    }
    // lone events are mostly noise
    let samples: Vec<(f64, f64)> = fronts
        .into_iter()
        .filter(|(_, (_, n))| *n >= 2)
        .map(|(bin, (f, _))| ((bin as f64 + 0.5) * cfg.front_bin_us as f64, f))
        .collect();
    let mid = 0.5 * (t1 - t0) as f64;
    let first = line(&samples)?;
    let kept: Vec<(f64, f64)> = samples
        .iter()
        .copied()
        .filter(|&(t, f)| (f - (first.0 + first.1 * t)).abs() <= cfg.front_reject_px)
        .collect();
    let (a, b) = line(&kept)?;
    Some(a + b * mid)
}

fn line(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    if points.len() < 3 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let b = sxy / sxx;
    Some((my - b * mx, b))
}

/// Locates the tip in `[t_impact + offset, + accum)`.
fn tip_at(
    stream: &EventStream,
    t_impact: i64,
    offset_ms: f64,
    predicted: [f64; 2],
    d: [f64; 2],
    cfg: &SpeedConfig,
) -> Result<((u16, u16), [f64; 2]), SpeedFailure> {
    let t0 = t_impact + (offset_ms * 1000.0).round() as i64;
    let dur = (cfg.accum_ms * 1000.0).round() as i64;
    let missing = SpeedFailure::TipNotFound { offset_ms };
    let image =
        accumulate(stream, t0, dur, Some(PolarityFilter::Positive)).map_err(|_| missing.clone())?;
    let blob = shuttle_blob(&image, predicted, cfg);
    let px = leading_pixel(&blob, predicted, cfg.gate_px, d).ok_or(missing)?;
    let (x, y) = (px.0 as f64, px.1 as f64);
    if !cfg.subpixel {
        return Ok((px, [x, y]));
    }
    // projections are relative to the pixel tip, so the front is the shift
    let refined = match front_at_midpoint(stream, t0, t0 + dur, [x, y], d, cfg) {
        Some(shift) => [x + shift * d[0], y + shift * d[1]],
        None => [x, y],
    };
    Ok((px, refined))
}

/// Speed from the tips at the two post-impact offsets. Predictions come
/// from the impact position and the outbound track velocity.
pub fn estimate_speed(
    stream: &EventStream,
    impact: &ImpactTime,
    cal: &Calibration,
    cfg: &SpeedConfig,
) -> Result<SpeedResult, SpeedFailure> {
    let v = impact.post_velocity;
    let d = unit(v).ok_or(SpeedFailure::NoDirection)?;
    let half = 0.5 * cfg.accum_ms;
    let at = |ms: f64| {
        [
            impact.impact_xy[0] + v[0] * ms,
            impact.impact_xy[1] + v[1] * ms,
        ]
    };

    let (px1, tip1) = tip_at(
        stream,
        impact.t_impact,
        cfg.offset1_ms,
        at(cfg.offset1_ms + half),
        d,
        cfg,
    )?;
    // second prediction follows on from the first tip
    let dt = cfg.offset2_ms - cfg.offset1_ms;
    let pred2 = [tip1[0] + v[0] * dt, tip1[1] + v[1] * dt];
    let (px2, tip2) = tip_at(stream, impact.t_impact, cfg.offset2_ms, pred2, d, cfg)?;

    let displacement_px = (tip2[0] - tip1[0]).hypot(tip2[1] - tip1[1]);
    Ok(SpeedResult {
        speed: speed_from_displacement(displacement_px, cal.lateral_mm_per_px, dt),
        tip_30: tip1,
        tip_32: tip2,
        pixel_tips: [[px1.0, px1.1], [px2.0, px2.1]],
        displacement_px,
    })
}
