//! Candidate regions and the face/shaft split.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::ellipse::fit_ellipse_trimmed;
use crate::cluster;
use crate::events::PolarityImage;

pub type Pixel = (u16, u16);

/// An 8-connected set of positive pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub pixels: Vec<Pixel>,
    pub area: usize,
    /// `[x_min, y_min, x_max, y_max]`, inclusive.
    pub bbox: [u16; 4],
    pub centroid: [f64; 2],
}

impl Region {
    pub fn from_pixels(mut pixels: Vec<Pixel>) -> Option<Self> {
        if pixels.is_empty() {
            return None;
        }
        pixels.sort_unstable_by_key(|&(x, y)| (y, x));
        let mut bbox = [u16::MAX, u16::MAX, 0, 0];
        let (mut sx, mut sy) = (0.0, 0.0);
        for &(x, y) in &pixels {
            bbox[0] = bbox[0].min(x);
            bbox[1] = bbox[1].min(y);
            bbox[2] = bbox[2].max(x);
            bbox[3] = bbox[3].max(y);
            sx += x as f64;
            sy += y as f64;
        }
        let n = pixels.len() as f64;
        Some(Self {
            area: pixels.len(),
            bbox,
            centroid: [sx / n, sy / n],
            pixels,
        })
    }
}

/// 8-connected components of positive pixels with `area >= min_area` and a
/// centroid in the top `upper_fraction` of the image, largest first.
pub fn extract_candidates(
    image: &PolarityImage,
    min_area: usize,
    upper_fraction: f64,
) -> Vec<Region> {
    let pixels = image.positive_pixels();
    let coords: Vec<(i32, i32)> = pixels.iter().map(|&(x, y)| (x as i32, y as i32)).collect();
    let y_limit = upper_fraction * image.height as f64;
    let mut regions: Vec<Region> = cluster::components(&coords, 1)
        .into_iter()
        .filter(|g| g.len() >= min_area.max(1))
        .filter_map(|g| Region::from_pixels(g.into_iter().map(|i| pixels[i]).collect()))
        .filter(|r| r.centroid[1] < y_limit)
        .collect();
    // stable order: area, then top-left pixel
    regions.sort_by(|a, b| {
        b.area
            .cmp(&a.area)
            .then_with(|| (a.pixels[0].1, a.pixels[0].0).cmp(&(b.pixels[0].1, b.pixels[0].0)))
    });
    regions
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    /// Fraction of the widest row a face row must reach.
    pub extent_ratio: f64,
    pub min_face_rows: usize,
    /// Widest row must span at least this many px for a face to exist.
    pub min_face_width_px: f64,
    /// Lower pixels within this distance of the outline stay on the face.
    pub cap_tolerance_px: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            extent_ratio: 0.4,
            min_face_rows: 10,
            min_face_width_px: 20.0,
            cap_tolerance_px: 2.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaceShaft {
    pub face: Vec<Pixel>,
    pub shaft: Vec<Pixel>,
    /// Inclusive row range of the wide band.
    pub band: (u16, u16),
}

/// Leftmost and rightmost pixel of every row.
pub fn row_extremes(pixels: &[Pixel]) -> Vec<(f64, f64)> {
    let mut rows: BTreeMap<u16, (u16, u16)> = BTreeMap::new();
    for &(x, y) in pixels {
        let e = rows.entry(y).or_insert((x, x));
        e.0 = e.0.min(x);
        e.1 = e.1.max(x);
    }
    let mut out = Vec::with_capacity(rows.len() * 2);
    for (y, (lo, hi)) in rows {
        out.push((lo as f64, y as f64));
        if hi != lo {
            out.push((hi as f64, y as f64));
        }
    }
    out
}

/// Splits merged candidate pixels into face and shaft by row extent.
///
/// The band of consecutive rows around the widest row whose extent reaches
/// `extent_ratio` of the maximum, together with the rows above it, gives
/// the face outline. Pixels on or inside that outline are face; the rest
/// below its centre is shaft. Returns `None` when no face band is found.
pub fn split_face_shaft(regions: &[Region], cfg: &SplitConfig) -> Option<FaceShaft> {
    let mut merged: Vec<Pixel> = regions
        .iter()
        .flat_map(|r| r.pixels.iter().copied())
        .collect();
    merged.sort_unstable_by_key(|&(x, y)| (y, x));
    merged.dedup();
    if merged.is_empty() {
        return None;
    }
    let mut extent: BTreeMap<u16, (u16, u16)> = BTreeMap::new();
    for &(x, y) in &merged {
        let e = extent.entry(y).or_insert((x, x));
        e.0 = e.0.min(x);
        e.1 = e.1.max(x);
    }
    let width = |y: u16| extent.get(&y).map_or(0.0, |&(lo, hi)| (hi - lo) as f64);
    // widest row; ties go to the upper row
    let (&peak, _) = extent.iter().max_by(|a, b| {
        let (wa, wb) = ((a.1 .1 - a.1 .0), (b.1 .1 - b.1 .0));
        wa.cmp(&wb).then(b.0.cmp(a.0))
    })?;
    let max_width = width(peak);
    if max_width < cfg.min_face_width_px {
        return None;
    }
    let threshold = cfg.extent_ratio * max_width;
    let (mut top, mut bottom) = (peak, peak);
    while top > 0 && extent.contains_key(&(top - 1)) && width(top - 1) >= threshold {
        top -= 1;
    }
    while extent.contains_key(&(bottom + 1)) && width(bottom + 1) >= threshold {
        bottom += 1;
    }
    if ((bottom - top) as usize + 1) < cfg.min_face_rows {
        return None;
    }

    let core: Vec<Pixel> = merged.iter().copied().filter(|p| p.1 <= bottom).collect();
    let Ok(outline) = fit_ellipse_trimmed(&row_extremes(&core), cfg.cap_tolerance_px) else {
        let (face, shaft) = merged.into_iter().partition(|p| p.1 <= bottom);
        return Some(FaceShaft {
            face,
            shaft,
            band: (top, bottom),
        });
    };
    // a steep shaft can reach into the wide band, so every pixel is
    // classified against the outline; outliers above the centre are dropped
    let (mut face, mut shaft) = (Vec::new(), Vec::new());
    for p in merged {
        let (x, y) = (p.0 as f64, p.1 as f64);
        if outline.normalized_radius(x, y) <= 1.0
            || outline.sampson_distance(x, y) <= cfg.cap_tolerance_px
        {
            face.push(p);
        } else if y > outline.cy {
            shaft.push(p);
        }
    }
    Some(FaceShaft {
        face,
        shaft,
        band: (top, bottom),
    })
}

/// Removes pixels with no other pixel within Chebyshev distance `radius`.
pub fn drop_isolated(pixels: &[Pixel], radius: u16) -> Vec<Pixel> {
    let set: HashSet<Pixel> = pixels.iter().copied().collect();
    let r = radius as i32;
    pixels
        .iter()
        .copied()
        .filter(|&(x, y)| {
            (-r..=r).any(|dy| {
                (-r..=r).any(|dx| {
                    let (nx, ny) = (x as i32 + dx, y as i32 + dy);
                    (dx, dy) != (0, 0)
                        && nx >= 0
                        && ny >= 0
                        && set.contains(&(nx as u16, ny as u16))
                })
            })
        })
        .collect()
}
