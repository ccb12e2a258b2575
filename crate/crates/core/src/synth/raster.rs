//! Scanline coverage of simple silhouettes.
//!
//! A pixel is covered when its centre (integer coordinates) lies strictly
//! inside a shape.

/// Convex or elliptical silhouette in pixel coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Disc {
        c: [f64; 2],
        r: f64,
    },
    /// Convex polygon, vertices in either winding order.
    Polygon(Vec<[f64; 2]>),
    /// Annulus between an ellipse and the same ellipse grown by `width`.
    /// `a` runs along the major axis, tilted `tilt` radians from vertical.
    Ring {
        c: [f64; 2],
        a: f64,
        b: f64,
        tilt: f64,
        width: f64,
    },
}

/// Rectangle of `width` centred on the segment `p`–`q`.
pub fn thick_segment(p: [f64; 2], q: [f64; 2], width: f64) -> Shape {
    let (dx, dy) = (q[0] - p[0], q[1] - p[1]);
    let len = dx.hypot(dy).max(f64::MIN_POSITIVE);
    let (nx, ny) = (-dy / len * width / 2.0, dx / len * width / 2.0);
    Shape::Polygon(vec![
        [p[0] + nx, p[1] + ny],
        [q[0] + nx, q[1] + ny],
        [q[0] - nx, q[1] - ny],
        [p[0] - nx, p[1] - ny],
    ])
}

/// Trapezoid along `axis` from `base` (width `w0`) to `base + axis·len`
/// (width `w1`).
pub fn taper(base: [f64; 2], axis: [f64; 2], len: f64, w0: f64, w1: f64) -> Shape {
    let (px, py) = (-axis[1], axis[0]);
    let end = [base[0] + axis[0] * len, base[1] + axis[1] * len];
    Shape::Polygon(vec![
        [base[0] + px * w0 / 2.0, base[1] + py * w0 / 2.0],
        [end[0] + px * w1 / 2.0, end[1] + py * w1 / 2.0],
        [end[0] - px * w1 / 2.0, end[1] - py * w1 / 2.0],
        [base[0] - px * w0 / 2.0, base[1] - py * w0 / 2.0],
    ])
}

fn ellipse_span(c: [f64; 2], a: f64, b: f64, tilt: f64, y: f64) -> Option<(f64, f64)> {
    let (s, co) = tilt.sin_cos();
    let dy = y - c[1];
    // u = dx·cos + dy·sin (minor), v = dx·sin − dy·cos (major)
    let qa = co * co / (b * b) + s * s / (a * a);
    let qb = 2.0 * dy * co * s * (1.0 / (b * b) - 1.0 / (a * a));
    let qc = dy * dy * (s * s / (b * b) + co * co / (a * a)) - 1.0;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc <= 0.0 {
        return None;
    }
    let r = disc.sqrt();
    Some((c[0] + (-qb - r) / (2.0 * qa), c[0] + (-qb + r) / (2.0 * qa)))
}

fn ellipse_half_height(a: f64, b: f64, tilt: f64) -> f64 {
    ((a * tilt.cos()).powi(2) + (b * tilt.sin()).powi(2)).sqrt()
}

impl Shape {
    /// Vertical extent `(y_min, y_max)`.
    pub fn y_range(&self) -> (f64, f64) {
        match self {
            Shape::Disc { c, r } => (c[1] - r, c[1] + r),
            Shape::Polygon(v) => v
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                    (lo.min(p[1]), hi.max(p[1]))
                }),
            Shape::Ring {
                c,
                a,
                b,
                tilt,
                width,
            } => {
                let h = ellipse_half_height(a + width, b + width, *tilt);
                (c[1] - h, c[1] + h)
            }
        }
    }

    /// Open x-intervals of the shape on row `y`.
    pub fn row_spans(&self, y: f64, out: &mut Vec<(f64, f64)>) {
        match self {
            Shape::Disc { c, r } => {
                let d = r * r - (y - c[1]).powi(2);
                if d > 0.0 {
                    let h = d.sqrt();
                    out.push((c[0] - h, c[0] + h));
                }
            }
            Shape::Polygon(v) => {
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                for i in 0..v.len() {
                    let (p, q) = (v[i], v[(i + 1) % v.len()]);
                    if (p[1] <= y && y < q[1]) || (q[1] <= y && y < p[1]) {
                        let x = p[0] + (y - p[1]) / (q[1] - p[1]) * (q[0] - p[0]);
                        lo = lo.min(x);
                        hi = hi.max(x);
                    }
                }
                if lo < hi {
                    out.push((lo, hi));
                }
            }
            Shape::Ring {
                c,
                a,
                b,
                tilt,
                width,
            } => {
                let Some((ol, or)) = ellipse_span(*c, a + width, b + width, *tilt, y) else {
                    return;
                };
                match ellipse_span(*c, *a, *b, *tilt, y) {
                    // the inner boundary itself stays covered
                    Some((il, ir)) => {
                        out.push((ol, il + 1e-9));
                        out.push((ir - 1e-9, or));
                    }
                    None => out.push((ol, or)),
                }
            }
        }
    }
}

/// Sorted, deduplicated indices `y·width + x` of pixels covered by any shape.
pub fn coverage(shapes: &[Shape], width: u16, height: u16) -> Vec<u32> {
    let mut out = Vec::new();
    let mut spans = Vec::new();
    for shape in shapes {
        let (y0, y1) = shape.y_range();
        let ya = y0.ceil().max(0.0) as i64;
        let yb = y1.floor().min(height as f64 - 1.0) as i64;
        for y in ya..=yb {
            spans.clear();
            shape.row_spans(y as f64, &mut spans);
            for &(l, r) in &spans {
                // strictly inside: l < x < r
                let xa = (l.floor() + 1.0).max(0.0) as i64;
                let xb = (r.ceil() - 1.0).min(width as f64 - 1.0) as i64;
                for x in xa..=xb {
                    out.push((y as u32) * width as u32 + x as u32);
                }
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Pixels gained and lost between two coverage sets.
pub fn diff(prev: &[u32], cur: &[u32], mut emit: impl FnMut(u32, i8)) {
    let (mut i, mut j) = (0, 0);
    while i < prev.len() || j < cur.len() {
        match (prev.get(i), cur.get(j)) {
            (Some(&a), Some(&b)) if a == b => {
                i += 1;
                j += 1;
            }
            (Some(&a), Some(&b)) if a < b => {
                emit(a, -1);
                i += 1;
            }
            (Some(_), Some(&b)) => {
                emit(b, 1);
                j += 1;
            }
            (Some(&a), None) => {
                emit(a, -1);
                i += 1;
            }
            (None, Some(&b)) => {
                emit(b, 1);
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
}
