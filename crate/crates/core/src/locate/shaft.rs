//! Robust line fit for the racket shaft.

use std::f64::consts::FRAC_PI_2;

use nalgebra::Matrix2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ellipse::normalize_axis_angle;

type Point = (f64, f64);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShaftLine {
    /// Angle from image vertical, radians in (−π/2, π/2]. Positive leans
    /// the upper end to the right.
    pub phi: f64,
    pub inliers: usize,
    pub inlier_ratio: f64,
    /// A point on the line (inlier centroid).
    pub point: [f64; 2],
}

#[derive(Debug, Clone, Copy)]
pub struct RansacConfig {
    pub iterations: usize,
    pub tolerance_px: f64,
    pub seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            iterations: 200,
            tolerance_px: 2.0,
            seed: 0,
        }
    }
}

/// Angle from vertical of direction `(dx, dy)` (image y down).
pub fn angle_from_vertical(dx: f64, dy: f64) -> f64 {
    // orient upward first so the sign convention matches the ellipse tilt
    let (dx, dy) = if dy > 0.0 || (dy == 0.0 && dx < 0.0) {
        (-dx, -dy)
    } else {
        (dx, dy)
    };
    if dy == 0.0 {
        return FRAC_PI_2;
    }
    normalize_axis_angle(dx.atan2(-dy))
}

/// Total least squares line through `points`: centroid and unit direction.
fn tls(points: &[(f64, f64)]) -> Option<([f64; 2], (f64, f64))> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx + syy == 0.0 {
        return None;
    }
    let eig = Matrix2::new(sxx, sxy, sxy, syy).symmetric_eigen();
    let k = if eig.eigenvalues[0] >= eig.eigenvalues[1] {
        0
    } else {
        1
    };
    let v = eig.eigenvectors.column(k);
    Some(([mx, my], (v[0], v[1])))
}

fn line_distance(p: (f64, f64), origin: (f64, f64), dir: (f64, f64)) -> f64 {
    ((p.0 - origin.0) * dir.1 - (p.1 - origin.1) * dir.0).abs()
}

/// RANSAC line fit with a total-least-squares refit on the inliers.
/// Returns `None` with fewer than two distinct points.
pub fn fit_shaft(points: &[(f64, f64)], cfg: &RansacConfig) -> Option<ShaftLine> {
    if points.len() < 2 {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let count_inliers = |o: (f64, f64), d: (f64, f64)| {
        points
            .iter()
            .filter(|&&p| line_distance(p, o, d) <= cfg.tolerance_px)
            .count()
    };

    // (origin, direction, inliers)
    let mut best: Option<(Point, Point, usize)> = None;
    for _ in 0..cfg.iterations.max(1) {
        let i = rng.random_range(0..points.len());
        let j = rng.random_range(0..points.len());
        let (p, q) = (points[i], points[j]);
        let (dx, dy) = (q.0 - p.0, q.1 - p.1);
        let len = dx.hypot(dy);
        if len == 0.0 {
            continue;
        }
        let dir = (dx / len, dy / len);
        let n = count_inliers(p, dir);
        if best.is_none_or(|b| n > b.2) {
            best = Some((p, dir, n));
        }
    }
    let (origin, dir) = match best {
        Some((o, d, _)) => (o, d),
        None => {
            let (c, d) = tls(points)?;
            ((c[0], c[1]), d)
        }
    };
    let inliers: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&p| line_distance(p, origin, dir) <= cfg.tolerance_px)
        .collect();
    let (point, dir) = tls(&inliers).unwrap_or(([origin.0, origin.1], dir));
    let final_inliers = count_inliers((point[0], point[1]), dir);
    Some(ShaftLine {
        phi: angle_from_vertical(dir.0, dir.1),
        inliers: final_inliers,
        inlier_ratio: final_inliers as f64 / points.len() as f64,
        point,
    })
}
