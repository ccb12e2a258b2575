//! Direct least-squares ellipse fitting.
//!
//! Uses the numerically stable split of the Fitzgibbon constrained conic
//! fit (Halíř & Flusser). Points are centred and scaled before fitting.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Matrix2, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum EllipseError {
    #[error("need at least 6 points, got {0}")]
    TooFewPoints(usize),
    #[error("degenerate point set")]
    Degenerate,
    #[error("fitted conic is not an ellipse")]
    NotAnEllipse,
}

/// Geometric ellipse in image coordinates (x right, y down).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipseParams {
    pub cx: f64,
    pub cy: f64,
    /// Semi-major axis, px.
    pub a: f64,
    /// Semi-minor axis, px.
    pub b: f64,
    /// Major-axis angle from image vertical, radians in (−π/2, π/2].
    /// Positive leans the upper end of the major axis to the right.
    pub theta: f64,
}

/// Wraps an axis angle (modulo π) into (−π/2, π/2].
pub fn normalize_axis_angle(angle: f64) -> f64 {
    let mut a = angle.rem_euclid(PI);
    if a > FRAC_PI_2 {
        a -= PI;
    }
    a
}

impl EllipseParams {
    /// Unit vector along the major axis, pointing up in the image.
    pub fn major_dir(&self) -> (f64, f64) {
        (self.theta.sin(), -self.theta.cos())
    }

    /// Unit vector along the minor axis, pointing right in the image.
    pub fn minor_dir(&self) -> (f64, f64) {
        (self.theta.cos(), self.theta.sin())
    }

    /// Coordinates of `(x, y)` in the ellipse frame: (along minor, along major).
    pub fn local(&self, x: f64, y: f64) -> (f64, f64) {
        let (dx, dy) = (x - self.cx, y - self.cy);
        let (mx, my) = self.minor_dir();
        let (jx, jy) = self.major_dir();
        (dx * mx + dy * my, dx * jx + dy * jy)
    }

    /// Point on the ellipse at parameter `s` (radians, from the +minor axis).
    pub fn point_at(&self, s: f64) -> (f64, f64) {
        let (mx, my) = self.minor_dir();
        let (jx, jy) = self.major_dir();
        let (u, v) = (self.b * s.cos(), self.a * s.sin());
        (self.cx + u * mx + v * jx, self.cy + u * my + v * jy)
    }

    /// Normalized radius: < 1 inside, 1 on the curve.
    pub fn normalized_radius(&self, x: f64, y: f64) -> f64 {
        let (u, v) = self.local(x, y);
        ((u / self.b).powi(2) + (v / self.a).powi(2)).sqrt()
    }

    /// True when `(x, y)` lies inside the ellipse shrunk by `margin` px on
    /// both semi-axes.
    pub fn contains_with_margin(&self, x: f64, y: f64, margin: f64) -> bool {
        let (a, b) = (self.a - margin, self.b - margin);
        if a <= 0.0 || b <= 0.0 {
            return false;
        }
        let (u, v) = self.local(x, y);
        (u / b).powi(2) + (v / a).powi(2) < 1.0
    }

    /// Conic coefficients `[A, B, C, D, E, F]` of
    /// `A x² + B xy + C y² + D x + E y + F = 0`.
    pub fn to_conic(&self) -> [f64; 6] {
        let (mx, my) = self.minor_dir();
        let (jx, jy) = self.major_dir();
        // (u/b)² + (v/a)² − 1 with u = m·d, v = j·d
        let (ib2, ia2) = (1.0 / (self.b * self.b), 1.0 / (self.a * self.a));
        let qa = mx * mx * ib2 + jx * jx * ia2;
        let qb = 2.0 * (mx * my * ib2 + jx * jy * ia2);
        let qc = my * my * ib2 + jy * jy * ia2;
        let (cx, cy) = (self.cx, self.cy);
        let d = -2.0 * qa * cx - qb * cy;
        let e = -qb * cx - 2.0 * qc * cy;
        let f = qa * cx * cx + qb * cx * cy + qc * cy * cy - 1.0;
        [qa, qb, qc, d, e, f]
    }

    /// First-order geometric distance of a point to the curve, px.
    pub fn sampson_distance(&self, x: f64, y: f64) -> f64 {
        let [a, b, c, d, e, f] = self.to_conic();
        let val = a * x * x + b * x * y + c * y * y + d * x + e * y + f;
        let gx = 2.0 * a * x + b * y + d;
        let gy = b * x + 2.0 * c * y + e;
        let g = gx.hypot(gy);
        if g == 0.0 {
            f64::INFINITY
        } else {
            val.abs() / g
        }
    }
}

/// Converts conic coefficients to geometric parameters.
pub fn conic_to_params(conic: [f64; 6]) -> Result<EllipseParams, EllipseError> {
    let [a, b, c, d, e, f] = conic;
    if b * b - 4.0 * a * c >= 0.0 {
        return Err(EllipseError::NotAnEllipse);
    }
    let m = Matrix2::new(2.0 * a, b, b, 2.0 * c);
    let center = m.try_inverse().ok_or(EllipseError::Degenerate)? * nalgebra::Vector2::new(-d, -e);
    let (cx, cy) = (center[0], center[1]);
    let fc = a * cx * cx + b * cx * cy + c * cy * cy + d * cx + e * cy + f;
    let q = Matrix2::new(a, 0.5 * b, 0.5 * b, c);
    let eig = q.symmetric_eigen();
    let (l0, l1) = (eig.eigenvalues[0], eig.eigenvalues[1]);
    let (s0, s1) = (-fc / l0, -fc / l1);
    if !(s0 > 0.0 && s1 > 0.0) {
        return Err(EllipseError::NotAnEllipse);
    }
    // the smaller eigenvalue belongs to the major axis
    let (major_sq, minor_sq, k) = if s0 >= s1 { (s0, s1, 0) } else { (s1, s0, 1) };
    let v = eig.eigenvectors.column(k);
    let psi = v[1].atan2(v[0]);
    Ok(EllipseParams {
        cx,
        cy,
        a: major_sq.sqrt(),
        b: minor_sq.sqrt(),
        theta: normalize_axis_angle(psi + FRAC_PI_2),
    })
}

fn null_vector(m: &Matrix3<f64>) -> Vector3<f64> {
    let rows = [
        m.row(0).transpose(),
        m.row(1).transpose(),
        m.row(2).transpose(),
    ];
    let mut best = Vector3::zeros();
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let c = rows[i].cross(&rows[j]);
        if c.norm() > best.norm() {
            best = c;
        }
    }
    best
}

/// Direct least-squares ellipse fit to at least six points.
pub fn fit_ellipse(points: &[(f64, f64)]) -> Result<EllipseParams, EllipseError> {
    if points.len() < 6 {
        return Err(EllipseError::TooFewPoints(points.len()));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let spread = points
        .iter()
        .map(|p| (p.0 - mx).powi(2) + (p.1 - my).powi(2))
        .sum::<f64>()
        / n;
    if !(spread > 1e-18) {
        return Err(EllipseError::Degenerate);
    }
    let s = (spread / 2.0).sqrt();

    let mut s1 = Matrix3::<f64>::zeros();
    let mut s2 = Matrix3::<f64>::zeros();
    let mut s3 = Matrix3::<f64>::zeros();
    for p in points {
        let (x, y) = ((p.0 - mx) / s, (p.1 - my) / s);
        let q = Vector3::new(x * x, x * y, y * y);
        let l = Vector3::new(x, y, 1.0);
        s1 += q * q.transpose();
        s2 += q * l.transpose();
        s3 += l * l.transpose();
    }
    let s3_inv = s3.try_inverse().ok_or(EllipseError::Degenerate)?;
    let t = -s3_inv * s2.transpose();
    let m = s1 + s2 * t;
    // premultiply by the inverse of the constraint block [[0,0,2],[0,-1,0],[2,0,0]]
    let reduced = Matrix3::from_rows(&[m.row(2) * 0.5, -m.row(1), m.row(0) * 0.5]);

    let eigenvalues = reduced
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= 1e-9 * (1.0 + z.re.abs()))
        .map(|z| z.re)
        .collect::<Vec<_>>();
    let mut best: Option<(f64, Vector3<f64>)> = None;
    for lambda in eigenvalues {
        let v = null_vector(&(reduced - Matrix3::identity() * lambda));
        let norm = v.norm();
        if norm == 0.0 {
            continue;
        }
        let v = v / norm;
        let cond = 4.0 * v[0] * v[2] - v[1] * v[1];
        if cond > 0.0 && best.is_none_or(|(c, _)| cond > c) {
            best = Some((cond, v));
        }
    }
    let (_, quad) = best.ok_or(EllipseError::NotAnEllipse)?;
    let lin = t * quad;
    let local = conic_to_params([quad[0], quad[1], quad[2], lin[0], lin[1], lin[2]])?;
    let out = EllipseParams {
        cx: mx + s * local.cx,
        cy: my + s * local.cy,
        a: s * local.a,
        b: s * local.b,
        theta: local.theta,
    };
    if !(out.a.is_finite() && out.b > 0.0) {
        return Err(EllipseError::Degenerate);
    }
    Ok(out)
}

/// Fits, drops points farther than `tol_px` from the curve, and refits
/// once. Falls back to the first fit when too few points remain.
pub fn fit_ellipse_trimmed(
    points: &[(f64, f64)],
    tol_px: f64,
) -> Result<EllipseParams, EllipseError> {
    let first = fit_ellipse(points)?;
    let kept: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(x, y)| first.sampson_distance(x, y) <= tol_px)
        .collect();
    if kept.len() == points.len() || kept.len() < 6 {
        return Ok(first);
    }
    fit_ellipse(&kept).or(Ok(first))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(e: &EllipseParams, n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| e.point_at(2.0 * PI * i as f64 / n as f64))
            .collect()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn circle() {
        let c = EllipseParams {
            cx: 100.0,
            cy: 100.0,
            a: 50.0,
            b: 50.0,
            theta: 0.0,
        };
        let e = fit_ellipse(&sample(&c, 60)).unwrap();
        assert!((e.cx - 100.0).abs() < 1e-9 && (e.cy - 100.0).abs() < 1e-9);
        assert!((e.a - 50.0).abs() < 1e-9 && (e.b - 50.0).abs() < 1e-9);
    }

    #[test]
    fn exact_tilted_ellipse() {
        let truth = EllipseParams {
            cx: 300.0,
            cy: 200.0,
            a: 120.0,
            b: 92.0,
            theta: 0.1,
        };
        let e = fit_ellipse(&sample(&truth, 200)).unwrap();
        assert!(rel(e.cx, 300.0) < 1e-6);
        assert!(rel(e.cy, 200.0) < 1e-6);
        assert!(rel(e.a, 120.0) < 1e-6);
        assert!(rel(e.b, 92.0) < 1e-6);
        assert!(rel(e.theta, 0.1) < 1e-6);
    }

    #[test]
    fn partial_arc() {
        let truth = EllipseParams {
            cx: 50.0,
            cy: -20.0,
            a: 30.0,
            b: 10.0,
            theta: -1.2,
        };
        let pts: Vec<_> = (0..40).map(|i| truth.point_at(0.1 * i as f64)).collect();
        let e = fit_ellipse(&pts).unwrap();
        assert!(rel(e.a, 30.0) < 1e-6 && rel(e.theta, -1.2) < 1e-6);
    }

    #[test]
    fn degenerate_inputs() {
        let line: Vec<_> = (0..20).map(|i| (i as f64, 2.0 * i as f64)).collect();
        assert!(fit_ellipse(&line).is_err());
        assert_eq!(
            fit_ellipse(&[(0.0, 0.0); 5]).unwrap_err(),
            EllipseError::TooFewPoints(5)
        );
        assert!(fit_ellipse(&[(1.0, 1.0); 10]).is_err());
    }

    #[test]
    fn conic_round_trip() {
        let e = EllipseParams {
            cx: 12.0,
            cy: 7.0,
            a: 9.0,
            b: 4.0,
            theta: 0.7,
        };
        let back = conic_to_params(e.to_conic()).unwrap();
        assert!((back.cx - 12.0).abs() < 1e-9);
        assert!((back.a - 9.0).abs() < 1e-9);
        assert!((back.theta - 0.7).abs() < 1e-9);
        let (x, y) = e.point_at(1.0);
        assert!(e.sampson_distance(x, y) < 1e-9);
        assert!((e.normalized_radius(x, y) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn axis_angle_wraps() {
        assert!((normalize_axis_angle(PI) - 0.0).abs() < 1e-12);
        assert!((normalize_axis_angle(FRAC_PI_2) - FRAC_PI_2).abs() < 1e-12);
        assert!((normalize_axis_angle(-FRAC_PI_2) - FRAC_PI_2).abs() < 1e-12);
        assert!((normalize_axis_angle(2.0) - (2.0 - PI)).abs() < 1e-12);
    }

    #[test]
    fn trimmed_fit_ignores_interior_outliers() {
        let truth = EllipseParams {
            cx: 200.0,
            cy: 150.0,
            a: 64.0,
            b: 49.0,
            theta: 0.05,
        };
        let mut pts = sample(&truth, 120);
        pts.extend([(200.0, 170.0), (205.0, 172.0), (198.0, 168.0)]);
        let e = fit_ellipse_trimmed(&pts, 2.0).unwrap();
        assert!((e.cx - 200.0).abs() < 1e-6 && (e.a - 64.0).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn rotation_equivariance(rho in -1.5f64..1.5, theta in -0.7f64..0.7) {
            let truth = EllipseParams { cx: 40.0, cy: 60.0, a: 30.0, b: 18.0, theta };
            let pts = sample(&truth, 50);
            let e0 = fit_ellipse(&pts).unwrap();
            let (c, s) = (rho.cos(), rho.sin());
            // rotating image coordinates by rho (clockwise on screen, y down)
            let rotated: Vec<_> = pts.iter().map(|&(x, y)| {
                let (dx, dy) = (x - 40.0, y - 60.0);
                (40.0 + c * dx - s * dy, 60.0 + s * dx + c * dy)
            }).collect();
            let e1 = fit_ellipse(&rotated).unwrap();
            let d = normalize_axis_angle(e1.theta - e0.theta - rho);
            prop_assert!(d.abs() < 1e-6, "d = {}", d);
            prop_assert!((e1.a - e0.a).abs() < 1e-6);
        }
    }
}
