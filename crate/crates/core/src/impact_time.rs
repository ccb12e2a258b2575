//! Shuttlecock tracking in the lateral view and impact timing.
//!
//! The tracker follows the shuttlecock packet by packet inside the swing
//! interval. Each packet's events are grouped into spatial clusters; the
//! shuttlecock is the compact cluster nearest the constant-velocity
//! prediction, which keeps long racket silhouettes out of the track. Impact
//! time is the breakpoint of a continuous two-segment linear fit to x(t).

use serde::{Deserialize, Serialize};

use crate::cluster;
use crate::events::{packetize_range, EventPacket, EventStream};
use crate::swing::SwingInterval;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    /// Packet midpoint, µs.
    pub t: i64,
    pub x: f64,
    pub y: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactTime {
    pub t_impact: i64,
    /// Sum of squared residuals of the two-segment fit, px².
    pub breakpoint_residual: f64,
    /// px/ms
    pub pre_slope: f64,
    /// px/ms
    pub post_slope: f64,
    /// Shuttlecock position at the breakpoint, px.
    pub impact_xy: [f64; 2],
    /// Outbound image velocity, px/ms.
    pub post_velocity: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[serde(tag = "status", content = "detail", rename_all = "snake_case")]
pub enum TimingFailure {
    #[error("untrackable: {0}")]
    Untrackable(String),
    #[error("no inflection: {0}")]
    NoInflection(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimerConfig {
    /// Gate radius around the predicted position, px.
    pub gate_px: f64,
    pub min_track_points: usize,
    pub min_slope_change_px_per_ms: f64,
    /// Consecutive empty packets tolerated before the track ends.
    pub max_missed_packets: usize,
    /// Largest bounding-box side of a shuttlecock cluster, px.
    pub max_cluster_extent_px: f64,
    pub min_cluster_support: usize,
    /// Chebyshev distance that joins event pixels into one cluster.
    pub cluster_link_px: i32,
    /// Packets at the start of the interval searched for the track seed.
    pub seed_packets: usize,
    pub min_segment_points: usize,
    /// Events averaged for the track position.
    pub centroid_polarity: CentroidPolarity,
}

/// Which events of the shuttlecock cluster locate it. Leading edges
/// (positive events) are insensitive to which way the skirt trails.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CentroidPolarity {
    Positive,
    All,
}

impl Default for TimerConfig {
    fn default() -> Self {
        Self {
            gate_px: 30.0,
            min_track_points: 10,
            min_slope_change_px_per_ms: 0.5,
            max_missed_packets: 5,
            max_cluster_extent_px: 50.0,
            min_cluster_support: 5,
            cluster_link_px: 2,
            seed_packets: 20,
            min_segment_points: 3,
            centroid_polarity: CentroidPolarity::Positive,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Cluster {
    x: f64,
    y: f64,
    support: usize,
    extent: f64,
}

fn clusters(packet: &EventPacket<'_>, cfg: &TimerConfig) -> Vec<Cluster> {
    let mut pixels: Vec<((i32, i32), bool)> = packet
        .events
        .iter()
        .map(|e| ((e.x as i32, e.y as i32), e.p > 0))
        .collect();
    pixels.sort_unstable();
    // (all, positive) event counts per unique pixel
    let mut unique: Vec<(i32, i32)> = Vec::with_capacity(pixels.len());
    let mut weight: Vec<(usize, usize)> = Vec::with_capacity(pixels.len());
    for (p, pos) in pixels {
        if unique.last() != Some(&p) {
            unique.push(p);
            weight.push((0, 0));
        }
        let w = weight.last_mut().unwrap();
        w.0 += 1;
        w.1 += pos as usize;
    }
    cluster::components(&unique, cfg.cluster_link_px)
        .into_iter()
        .map(|members| {
            let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
            let (mut px, mut py, mut np) = (0.0, 0.0, 0usize);
            let (mut x0, mut x1, mut y0, mut y1) = (i32::MAX, i32::MIN, i32::MAX, i32::MIN);
            for &i in &members {
                let (x, y) = unique[i];
                let (w, wp) = weight[i];
                sx += (x as f64) * w as f64;
                sy += (y as f64) * w as f64;
                n += w;
                px += (x as f64) * wp as f64;
                py += (y as f64) * wp as f64;
                np += wp;
                x0 = x0.min(x);
                x1 = x1.max(x);
                y0 = y0.min(y);
                y1 = y1.max(y);
            }
            let (x, y) = match cfg.centroid_polarity {
                CentroidPolarity::Positive if np > 0 => (px / np as f64, py / np as f64),
                _ => (sx / n as f64, sy / n as f64),
            };
            Cluster {
                x,
                y,
                support: n,
                extent: ((x1 - x0).max(y1 - y0) + 1) as f64,
            }
        })
        .collect()
}

fn is_candidate(c: &Cluster, cfg: &TimerConfig) -> bool {
    c.support >= cfg.min_cluster_support && c.extent <= cfg.max_cluster_extent_px
}

/// Tracks the shuttlecock through `packets`, seeding from the topmost
/// compact cluster among the first packets.
pub fn track_shuttle(
    packets: &[EventPacket<'_>],
    cfg: &TimerConfig,
) -> Result<Vec<TrackPoint>, TimingFailure> {
    let seed = packets
        .iter()
        .take(cfg.seed_packets)
        .enumerate()
        .find_map(|(k, p)| {
            clusters(p, cfg)
                .into_iter()
                .filter(|c| is_candidate(c, cfg))
                .min_by(|a, b| a.y.total_cmp(&b.y).then(a.x.total_cmp(&b.x)))
                .map(|c| (k, c))
        });
    let Some((start, seed)) = seed else {
        return Err(TimingFailure::Untrackable(
            "no compact event cluster at the start of the interval".into(),
        ));
    };

    let mut track = vec![TrackPoint {
        t: packets[start].midpoint(),
        x: seed.x,
        y: seed.y,
        support: seed.support,
    }];
    let mut missed = 0usize;
    for packet in &packets[start + 1..] {
        let t = packet.midpoint();
        let last = track[track.len() - 1];
        let (px, py) = match track.len() {
            1 => (last.x, last.y),
            n => {
                let prev = track[n - 2];
                let dt = (last.t - prev.t) as f64;
                let k = (t - last.t) as f64 / dt;
                (
                    last.x + (last.x - prev.x) * k,
                    last.y + (last.y - prev.y) * k,
                )
            }
        };
        let gate = cfg.gate_px * (1 + missed) as f64;
        let best = clusters(packet, cfg)
            .into_iter()
            .filter(|c| is_candidate(c, cfg))
            .map(|c| (c, (c.x - px).hypot(c.y - py)))
            .filter(|(_, d)| *d <= gate)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match best {
            Some((c, _)) => {
                track.push(TrackPoint {
                    t,
                    x: c.x,
                    y: c.y,
                    support: c.support,
                });
                missed = 0;
            }
            None => {
                missed += 1;
                if missed > cfg.max_missed_packets {
                    break;
                }
            }
        }
    }
    if track.len() < cfg.min_track_points {
        return Err(TimingFailure::Untrackable(format!(
            "track has {} points, need {}",
            track.len(),
            cfg.min_track_points
        )));
    }
    Ok(track)
}

/// Least-squares fit of `x = a + b·t + c·max(t − τ, 0)` for fixed τ.
/// Returns `(a, b, c, sse)`; `t` and `τ` share units.
pub(crate) fn hinge_fit(ts: &[f64], xs: &[f64], tau: f64) -> Option<(f64, f64, f64, f64)> {
    let mut m = nalgebra::Matrix3::<f64>::zeros();
    let mut r = nalgebra::Vector3::<f64>::zeros();
    for (&t, &x) in ts.iter().zip(xs) {
        let row = nalgebra::Vector3::new(1.0, t, (t - tau).max(0.0));
        m += row * row.transpose();
        r += row * x;
    }
    let coef = m.try_inverse()? * r;
    let sse = ts
        .iter()
        .zip(xs)
        .map(|(&t, &x)| {
            let fit = coef[0] + coef[1] * t + coef[2] * (t - tau).max(0.0);
            (x - fit).powi(2)
        })
        .sum();
    Some((coef[0], coef[1], coef[2], sse))
}

/// Exhaustive continuous two-segment fit over midpoints between
/// consecutive track points.
pub fn detect_inflection(
    track: &[TrackPoint],
    cfg: &TimerConfig,
) -> Result<ImpactTime, TimingFailure> {
    let k = cfg.min_segment_points.max(2);
    if track.len() < 2 * k || track.len() < cfg.min_track_points {
        return Err(TimingFailure::NoInflection(format!(
            "{} track points are too few for a two-segment fit",
            track.len()
        )));
    }
    let t0 = track[0].t;
    // ms relative to the first point keeps the normal equations well scaled
    let ts: Vec<f64> = track.iter().map(|p| (p.t - t0) as f64 / 1000.0).collect();
    let xs: Vec<f64> = track.iter().map(|p| p.x).collect();

    let mut best: Option<(f64, (f64, f64, f64, f64))> = None;
    for i in (k - 1)..(track.len() - k) {
        let tau = 0.5 * (ts[i] + ts[i + 1]);
        if let Some(fit) = hinge_fit(&ts, &xs, tau) {
            if best.is_none_or(|(_, b)| fit.3 < b.3) {
                best = Some((tau, fit));
            }
        }
    }
    let Some((tau, (a, b, c, sse))) = best else {
        return Err(TimingFailure::NoInflection("degenerate track".into()));
    };
    if c.abs() < cfg.min_slope_change_px_per_ms {
        return Err(TimingFailure::NoInflection(format!(
            "slope change {c:.3} px/ms below {} px/ms",
            cfg.min_slope_change_px_per_ms
        )));
    }

    // outbound y velocity from a line through the post-break points
    let post: Vec<(f64, f64)> = ts
        .iter()
        .zip(track)
        .filter(|(&t, _)| t > tau)
        .map(|(&t, p)| (t, p.y))
        .collect();
    let (y_at, vy) = line_fit(&post).map_or((track[track.len() - 1].y, 0.0), |(icpt, slope)| {
        (icpt + slope * tau, slope)
    });

    Ok(ImpactTime {
        t_impact: t0 + (tau * 1000.0).round() as i64,
        breakpoint_residual: sse,
        pre_slope: b,
        post_slope: b + c,
        impact_xy: [a + b * tau, y_at],
        post_velocity: [b + c, vy],
    })
}

/// Ordinary least-squares line `y = intercept + slope·x`.
fn line_fit(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    if points.len() < 2 {
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
    let slope = sxy / sxx;
    Some((my - slope * mx, slope))
}

/// Tracks the shuttlecock inside `interval` and times the impact.
pub fn estimate_impact_time(
    stream: &EventStream,
    interval: &SwingInterval,
    cfg: &TimerConfig,
) -> Result<(ImpactTime, Vec<TrackPoint>), TimingFailure> {
    let packets = packetize_range(stream.events(), interval.onset_t, interval.end_t);
    let track = track_shuttle(&packets, cfg)?;
    let mut impact = detect_inflection(&track, cfg)?;
    impact.t_impact = impact.t_impact.clamp(interval.onset_t, interval.end_t);
    Ok((impact, track))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::{Event, View};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn hinge_track(break_ms: f64, s0: f64, s1: f64, noise: Option<(u64, f64)>) -> Vec<TrackPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(noise.map_or(0, |n| n.0));
        let normal = Normal::new(0.0, noise.map_or(0.0, |n| n.1)).unwrap();
        (0..200)
            .map(|i| {
                let t_ms = 0.25 + 0.5 * i as f64;
                let x = 400.0 + s0 * t_ms + (s1 - s0) * (t_ms - break_ms).max(0.0);
                TrackPoint {
                    t: (t_ms * 1000.0) as i64,
                    x: x + normal.sample(&mut rng),
                    y: 100.0,
                    support: 10,
                }
            })
            .collect()
    }

    #[test]
    fn noiseless_break_is_exact() {
        let track = hinge_track(50.0, -0.2, 3.0, None);
        let it = detect_inflection(&track, &TimerConfig::default()).unwrap();
        assert_eq!(it.t_impact, 50_000);
        assert!((it.pre_slope + 0.2).abs() < 1e-9);
        assert!((it.post_slope - 3.0).abs() < 1e-9);
        assert!(it.breakpoint_residual < 1e-12);
    }

    #[test]
    fn noisy_break_within_one_ms() {
        let hits = (0..100)
            .filter(|&seed| {
                let track = hinge_track(50.0, -0.2, 3.0, Some((seed, 1.0)));
                let it = detect_inflection(&track, &TimerConfig::default()).unwrap();
                (it.t_impact - 50_000).abs() <= 1000
            })
            .count();
        assert_eq!(hits, 100);
    }

    #[test]
    fn straight_line_has_no_inflection() {
        let track = hinge_track(50.0, 1.3, 1.3, None);
        assert!(matches!(
            detect_inflection(&track, &TimerConfig::default()),
            Err(TimingFailure::NoInflection(_))
        ));
    }

    #[test]
    fn too_short_track() {
        let track = hinge_track(50.0, 0.0, 3.0, None);
        assert!(detect_inflection(&track[..5], &TimerConfig::default()).is_err());
    }

    fn blob_packet_events(t: i64, cx: i32, cy: i32) -> Vec<Event> {
        let mut ev = Vec::new();
        for dy in -2..=2 {
            for dx in -2..=2 {
                ev.push(Event::new(t, (cx + dx) as u16, (cy + dy) as u16, 1));
            }
        }
        ev
    }

    #[test]
    fn stationary_blob_tracks_to_centroid() {
        let mut ev = Vec::new();
        for k in 0..40 {
            ev.extend(blob_packet_events(k * 500 + 100, 50, 60));
        }
        let s = EventStream::new(View::Lateral, 200, 200, None, ev).unwrap();
        let packets = packetize_range(s.events(), 0, 20_000);
        let track = track_shuttle(&packets, &TimerConfig::default()).unwrap();
        assert_eq!(track.len(), 40);
        for p in &track {
            assert_eq!((p.x, p.y), (50.0, 60.0));
        }
        assert!(detect_inflection(&track, &TimerConfig::default()).is_err());
    }

    #[test]
    fn empty_interval_is_untrackable() {
        let s = EventStream::new(View::Lateral, 200, 200, None, vec![]).unwrap();
        let iv = SwingInterval::starting_at(0);
        assert!(matches!(
            estimate_impact_time(&s, &iv, &TimerConfig::default()),
            Err(TimingFailure::Untrackable(_))
        ));
    }

    #[test]
    fn long_structures_are_ignored() {
        // a compact blob plus a 120 px vertical bar passing nearby
        let mut ev = Vec::new();
        for k in 0..30i64 {
            let t = k * 500 + 50;
            ev.extend(blob_packet_events(t, 100 + k as i32, 80));
            for y in 20..140 {
                ev.push(Event::new(t + 1, (60 + 2 * k) as u16, y, 1));
            }
        }
        ev.sort_by_key(|e| e.t);
        let s = EventStream::new(View::Lateral, 300, 200, None, ev).unwrap();
        let packets = packetize_range(s.events(), 0, 15_000);
        let track = track_shuttle(&packets, &TimerConfig::default()).unwrap();
        assert_eq!(track.len(), 30);
        for (k, p) in track.iter().enumerate() {
            assert_eq!(p.x, 100.0 + k as f64);
        }
    }
}
