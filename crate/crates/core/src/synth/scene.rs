//! Scene description and dual-view rendering.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use super::raster::{coverage, diff, taper, thick_segment, Shape};
use crate::error::{Error, Result};
use crate::events::{Event, EventStream, View, SENSOR_HEIGHT, SENSOR_WIDTH};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShuttleGeometry {
    pub cork_diameter_mm: f64,
    pub skirt_length_mm: f64,
    pub skirt_base_mm: f64,
    pub skirt_open_mm: f64,
    /// Centre of mass behind the cork centre, along the axis.
    pub com_offset_mm: f64,
}

impl Default for ShuttleGeometry {
    fn default() -> Self {
        Self {
            cork_diameter_mm: 25.0,
            skirt_length_mm: 60.0,
            skirt_base_mm: 25.0,
            skirt_open_mm: 65.0,
            com_offset_mm: 12.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseModel {
    /// Background events per pixel per second.
    pub lateral_rate_hz: f64,
    pub rear_rate_hz: f64,
    /// Per-step positional jitter of every silhouette, px.
    pub contour_jitter_px: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            lateral_rate_hz: 0.2,
            rear_rate_hz: 0.1,
            contour_jitter_px: 0.0,
        }
    }
}

/// Side view of the stroke: shuttle flight and an edge-on racket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LateralScene {
    pub width: u16,
    pub height: u16,
    pub mm_per_px: f64,
    /// Cork centre at impact, px.
    pub impact_px: [f64; 2],
    pub inbound_px_per_ms: [f64; 2],
    /// In-plane outbound speed.
    pub outbound_speed_mps: f64,
    /// Below horizontal, degrees.
    pub outbound_angle_deg: f64,
    /// Out-of-plane outbound component, invisible to this view.
    pub out_of_plane_mps: f64,
    /// Duration of the post-impact turnover, ms.
    pub flip_ms: f64,
    pub lead_ms: f64,
    pub tail_ms: f64,
    pub racket_speed_px_per_ms: f64,
    /// Racket speed after contact.
    pub racket_follow_px_per_ms: f64,
    pub head_length_mm: f64,
    pub frame_depth_mm: f64,
    pub shaft_length_mm: f64,
    pub shaft_width_mm: f64,
    /// Render the racket at all.
    pub racket: bool,
}

impl Default for LateralScene {
    fn default() -> Self {
        Self {
            width: SENSOR_WIDTH,
            height: SENSOR_HEIGHT,
            mm_per_px: 3.47,
            impact_px: [470.0, 300.0],
            inbound_px_per_ms: [-0.7, 1.7],
            outbound_speed_mps: 52.0,
            outbound_angle_deg: 10.0,
            out_of_plane_mps: 0.0,
            flip_ms: 8.0,
            lead_ms: 200.0,
            tail_ms: 45.0,
            racket_speed_px_per_ms: 8.0,
            racket_follow_px_per_ms: 4.0,
            head_length_mm: 280.0,
            frame_depth_mm: 10.0,
            shaft_length_mm: 300.0,
            shaft_width_mm: 7.0,
            racket: true,
        }
    }
}

/// View from behind the player onto the racket face.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RearScene {
    pub width: u16,
    pub height: u16,
    pub mm_per_px: f64,
    /// Inner-ellipse centre at impact, px.
    pub face_center_px: [f64; 2],
    /// Racket tilt from vertical, degrees.
    pub tilt_deg: f64,
    pub racket_px_per_ms: [f64; 2],
    /// In-plane rotation of the racket about the face centre, deg/ms.
    pub spin_deg_per_ms: f64,
    /// Relative shrink of the racket image per ms as it moves away from
    /// the camera; the scale is `1 − recede_per_ms · τ`.
    pub recede_per_ms: f64,
    pub face_inner_ml_mm: f64,
    pub face_inner_long_mm: f64,
    pub rim_width_mm: f64,
    pub shaft_length_mm: f64,
    pub shaft_width_mm: f64,
    /// Cork tip at impact in face coordinates (u, v), mm.
    pub impact_uv_mm: [f64; 2],
    pub shuttle_px_per_ms: [f64; 2],
    /// Image velocity of the tip after impact; the shuttle leaves mostly
    /// along the optical axis and drifts down.
    pub post_impact_px_per_ms: [f64; 2],
    pub lead_ms: f64,
    pub tail_ms: f64,
}

impl Default for RearScene {
    fn default() -> Self {
        Self {
            width: SENSOR_WIDTH,
            height: SENSOR_HEIGHT,
            mm_per_px: 1.86,
            face_center_px: [640.0, 250.0],
            tilt_deg: 0.0,
            racket_px_per_ms: [0.0, 0.0],
            spin_deg_per_ms: 1.0,
            recede_per_ms: 0.1,
            face_inner_ml_mm: 184.0,
            face_inner_long_mm: 240.0,
            rim_width_mm: 3.0,
            shaft_length_mm: 300.0,
            shaft_width_mm: 7.0,
            impact_uv_mm: [0.0, 0.0],
            shuttle_px_per_ms: [0.0, 2.0],
            post_impact_px_per_ms: [0.0, 1.5],
            lead_ms: 15.0,
            tail_ms: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneSpec {
    pub seed: u64,
    /// Impact instant, µs on the shared time base.
    pub t_impact_us: i64,
    pub trigger_us: Option<i64>,
    pub micro_step_us: i64,
    pub shuttle: ShuttleGeometry,
    pub lateral: LateralScene,
    pub rear: RearScene,
    pub noise: NoiseModel,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            t_impact_us: 1_000_000,
            trigger_us: None,
            micro_step_us: 100,
            shuttle: ShuttleGeometry::default(),
            lateral: LateralScene::default(),
            rear: RearScene::default(),
            noise: NoiseModel::default(),
        }
    }
}

/// Known answers for one rendered trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub t_impact_us: i64,
    pub u_mm: f64,
    pub v_mm: f64,
    /// In-plane outbound speed, m/s.
    pub speed_mps: f64,
    pub total_speed_mps: f64,
    /// Cork tip in the rear view at impact, px.
    pub rear_tip_px: [f64; 2],
    /// Lateral centre of mass at each packet midpoint: `[t_us, x, y]`.
    pub lateral_centroids: Vec<[f64; 3]>,
    /// Rear racket pixels (ring and shaft) at the last rendered step of the
    /// impact packet.
    #[serde(skip)]
    pub racket_mask: Vec<[u16; 2]>,
    /// Rear pixels the racket newly covers during the impact packet.
    #[serde(skip)]
    pub racket_events_mask: Vec<[u16; 2]>,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        let l = &self.lateral;
        let r = &self.rear;
        let ok = self.micro_step_us > 0
            && l.mm_per_px > 0.0
            && r.mm_per_px > 0.0
            && l.lead_ms > 0.0
            && l.tail_ms > 0.0
            && r.lead_ms > 0.0
            && r.tail_ms > 0.0
            && r.recede_per_ms >= 0.0
            && 1.0 - r.recede_per_ms * r.tail_ms > 0.1
            && l.outbound_speed_mps >= 0.0
            && r.face_inner_ml_mm > 0.0
            && r.face_inner_long_mm >= r.face_inner_ml_mm
            && r.rim_width_mm > 0.0
            && self.shuttle.cork_diameter_mm > 0.0
            && self.noise.lateral_rate_hz >= 0.0
            && self.noise.rear_rate_hz >= 0.0
            && self.noise.contour_jitter_px >= 0.0;
        if !ok {
            return Err(Error::Invalid(
                "scene spec has non-physical parameters".into(),
            ));
        }
        Ok(())
    }

    pub fn outbound_px_per_ms(&self) -> [f64; 2] {
        let l = &self.lateral;
        let s = l.outbound_speed_mps / l.mm_per_px;
        let a = l.outbound_angle_deg.to_radians();
        [s * a.cos(), s * a.sin()]
    }

    /// Normalized face radius of the impact point, < 1 inside.
    pub fn impact_face_radius(&self) -> f64 {
        let r = &self.rear;
        let [u, v] = r.impact_uv_mm;
        ((u / (r.face_inner_ml_mm / 2.0)).powi(2) + (v / (r.face_inner_long_mm / 2.0)).powi(2))
            .sqrt()
    }
}

fn unit(v: [f64; 2]) -> [f64; 2] {
    let n = v[0].hypot(v[1]);
    if n == 0.0 {
        [0.0, -1.0]
    } else {
        [v[0] / n, v[1] / n]
    }
}

fn lerp_angle(a: f64, b: f64, f: f64) -> f64 {
    let mut d = (b - a).rem_euclid(std::f64::consts::TAU);
    if d > std::f64::consts::PI {
        d -= std::f64::consts::TAU;
    }
    a + d * f
}

fn shuttle_shapes(g: &ShuttleGeometry, scale: f64, cork: [f64; 2], axis: [f64; 2]) -> [Shape; 2] {
    let r = g.cork_diameter_mm / 2.0 / scale;
    let base = [cork[0] + axis[0] * r * 0.5, cork[1] + axis[1] * r * 0.5];
    [
        Shape::Disc { c: cork, r },
        taper(
            base,
            axis,
            g.skirt_length_mm / scale,
            g.skirt_base_mm / scale,
            g.skirt_open_mm / scale,
        ),
    ]
}

impl SceneSpec {
    /// Shuttle axis (cork towards skirt) `tau_ms` after impact. The skirt
    /// trails the inbound flight and turns over to trail the outbound one.
    pub fn lateral_axis(&self, tau_ms: f64) -> [f64; 2] {
        let l = &self.lateral;
        let back_in = unit([-l.inbound_px_per_ms[0], -l.inbound_px_per_ms[1]]);
        if tau_ms < 0.0 {
            return back_in;
        }
        let out = self.outbound_px_per_ms();
        let back_out = unit([-out[0], -out[1]]);
        let f = if l.flip_ms > 0.0 {
            (tau_ms / l.flip_ms).min(1.0)
        } else {
            1.0
        };
        let a = lerp_angle(
            back_in[1].atan2(back_in[0]),
            back_out[1].atan2(back_out[0]),
            f,
        );
        [a.cos(), a.sin()]
    }

    /// Lateral centre of mass `tau_ms` after impact; its path kinks at
    /// impact and is straight on either side.
    pub fn lateral_com(&self, tau_ms: f64) -> [f64; 2] {
        let l = &self.lateral;
        let d = self.shuttle.com_offset_mm / l.mm_per_px;
        let axis = self.lateral_axis(-1.0);
        let c0 = [l.impact_px[0] + axis[0] * d, l.impact_px[1] + axis[1] * d];
        let v = if tau_ms < 0.0 {
            l.inbound_px_per_ms
        } else {
            self.outbound_px_per_ms()
        };
        [c0[0] + v[0] * tau_ms, c0[1] + v[1] * tau_ms]
    }

    /// Lateral cork centre `tau_ms` after impact. The shuttle turns about
    /// its centre of mass.
    pub fn lateral_cork(&self, tau_ms: f64) -> [f64; 2] {
        let d = self.shuttle.com_offset_mm / self.lateral.mm_per_px;
        let com = self.lateral_com(tau_ms);
        let axis = self.lateral_axis(tau_ms);
        [com[0] - axis[0] * d, com[1] - axis[1] * d]
    }

    /// Silhouettes rendered in `view` at `t_us`, without jitter.
    pub fn silhouettes(&self, view: View, t_us: i64) -> Vec<Shape> {
        let tau = (t_us - self.t_impact_us) as f64 / 1000.0;
        match view {
            View::Lateral => self.lateral_shapes(tau, [0.0, 0.0]),
            View::Rear => self.rear_shapes(tau, [0.0, 0.0]),
        }
    }

    fn lateral_shapes(&self, tau_ms: f64, offset: [f64; 2]) -> Vec<Shape> {
        let l = &self.lateral;
        let s = l.mm_per_px;
        let cork = self.lateral_cork(tau_ms);
        let cork = [cork[0] + offset[0], cork[1] + offset[1]];
        let mut shapes = shuttle_shapes(&self.shuttle, s, cork, self.lateral_axis(tau_ms)).to_vec();
        if l.racket {
            let r_cork = self.shuttle.cork_diameter_mm / 2.0 / s;
            let travel = if tau_ms < 0.0 {
                l.racket_speed_px_per_ms * tau_ms
            } else {
                l.racket_follow_px_per_ms * tau_ms
            };
            let face_x = l.impact_px[0] - r_cork + travel + offset[0];
            let depth = l.frame_depth_mm / s;
            let x = face_x - depth / 2.0;
            let v = self.rear.impact_uv_mm[1] / s;
            let half = l.head_length_mm / 2.0 / s;
            let top = l.impact_px[1] - half + v + offset[1];
            let bottom = l.impact_px[1] + half + v + offset[1];
            shapes.push(thick_segment([x, top], [x, bottom], depth));
            shapes.push(thick_segment(
                [x, bottom],
                [x, bottom + l.shaft_length_mm / s],
                l.shaft_width_mm / s,
            ));
        }
        shapes
    }

    /// Rear cork tip `tau_ms` after impact.
    pub fn rear_tip(&self, tau_ms: f64) -> [f64; 2] {
        let r = &self.rear;
        let p = self.rear_tip_at_impact();
        let v = if tau_ms < 0.0 {
            r.shuttle_px_per_ms
        } else {
            r.post_impact_px_per_ms
        };
        [p[0] + v[0] * tau_ms, p[1] + v[1] * tau_ms]
    }

    pub fn rear_tip_at_impact(&self) -> [f64; 2] {
        let r = &self.rear;
        let t = r.tilt_deg.to_radians();
        let (minor, major) = ([t.cos(), t.sin()], [t.sin(), -t.cos()]);
        let (u, v) = (
            r.impact_uv_mm[0] / r.mm_per_px,
            r.impact_uv_mm[1] / r.mm_per_px,
        );
        [
            r.face_center_px[0] + u * minor[0] + v * major[0],
            r.face_center_px[1] + u * minor[1] + v * major[1],
        ]
    }

    fn rear_racket_shapes(&self, tau_ms: f64, offset: [f64; 2]) -> Vec<Shape> {
        let r = &self.rear;
        let s = r.mm_per_px;
        let t = (r.tilt_deg + r.spin_deg_per_ms * tau_ms).to_radians();
        let c = [
            r.face_center_px[0] + r.racket_px_per_ms[0] * tau_ms + offset[0],
            r.face_center_px[1] + r.racket_px_per_ms[1] * tau_ms + offset[1],
        ];
        let k = 1.0 - r.recede_per_ms * tau_ms;
        let (a, b, w) = (
            k * r.face_inner_long_mm / 2.0 / s,
            k * r.face_inner_ml_mm / 2.0 / s,
            k * r.rim_width_mm / s,
        );
        let down = [-t.sin(), t.cos()];
        let start = a + 0.5 * w;
        let p = [c[0] + down[0] * start, c[1] + down[1] * start];
        let len = k * r.shaft_length_mm / s;
        let q = [p[0] + down[0] * len, p[1] + down[1] * len];
        vec![
            Shape::Ring {
                c,
                a,
                b,
                tilt: t,
                width: w,
            },
            thick_segment(p, q, k * r.shaft_width_mm / s),
        ]
    }

    fn rear_shapes(&self, tau_ms: f64, offset: [f64; 2]) -> Vec<Shape> {
        let mut shapes = self.rear_racket_shapes(tau_ms, offset);
        let tip = self.rear_tip(tau_ms);
        let r = self.shuttle.cork_diameter_mm / 2.0 / self.rear.mm_per_px;
        let cork = [tip[0] + offset[0], tip[1] - r + offset[1]];
        shapes.extend(shuttle_shapes(
            &self.shuttle,
            self.rear.mm_per_px,
            cork,
            [0.0, -1.0],
        ));
        shapes
    }
}

/// Renders moving silhouettes over `[t0, t1)` into contour events plus
/// Poisson background noise.
#[allow(clippy::too_many_arguments)]
fn render(
    view: View,
    width: u16,
    height: u16,
    t0: i64,
    t1: i64,
    step: i64,
    noise_hz: f64,
    jitter: f64,
    rng: &mut ChaCha8Rng,
    shapes_at: impl Fn(i64, [f64; 2]) -> Vec<Shape>,
    trigger: Option<i64>,
) -> Result<EventStream> {
    let jitter_dist = Normal::new(0.0, jitter).map_err(|e| Error::Invalid(e.to_string()))?;
    let mut offset = || {
        if jitter > 0.0 {
            [jitter_dist.sample(rng), jitter_dist.sample(rng)]
        } else {
            [0.0, 0.0]
        }
    };
    let w = width as u32;
    let mut events = Vec::new();
    let mut prev = coverage(&shapes_at(t0, offset()), width, height);
    let mut t = t0 + step;
    while t < t1 {
        let cur = coverage(&shapes_at(t, offset()), width, height);
        diff(&prev, &cur, |i, p| {
            events.push(Event::new(t, (i % w) as u16, (i / w) as u16, p))
        });
        prev = cur;
        t += step;
    }

    if noise_hz > 0.0 {
        let mean = noise_hz * width as f64 * height as f64 * (t1 - t0) as f64 * 1e-6;
        let n = Poisson::new(mean)
            .map_err(|e| Error::Invalid(e.to_string()))?
            .sample(rng) as usize;
        for _ in 0..n {
            let e = Event::new(
                rng.random_range(t0..t1),
                rng.random_range(0..width),
                rng.random_range(0..height),
                if rng.random_bool(0.5) { 1 } else { -1 },
            );
            events.push(e);
        }
    }
    events.sort_by_key(|e| (e.t, e.y, e.x, e.p));
    EventStream::new(view, width, height, trigger, events)
}

/// A rendered trial: both views and the answers.
#[derive(Debug, Clone)]
pub struct Trial {
    pub lateral: EventStream,
    pub rear: EventStream,
    pub truth: GroundTruth,
}

/// Renders both views of `spec`. Deterministic given the spec.
pub fn generate_trial(spec: &SceneSpec) -> Result<Trial> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let ts = spec.t_impact_us;
    let tau = |t: i64| (t - ts) as f64 / 1000.0;
    let l = &spec.lateral;
    let r = &spec.rear;

    let (lt0, lt1) = (
        ts - (l.lead_ms * 1000.0) as i64,
        ts + (l.tail_ms * 1000.0) as i64,
    );
    let lateral = render(
        View::Lateral,
        l.width,
        l.height,
        lt0,
        lt1,
        spec.micro_step_us,
        spec.noise.lateral_rate_hz,
        spec.noise.contour_jitter_px,
        &mut rng,
        |t, o| spec.lateral_shapes(tau(t), o),
        spec.trigger_us,
    )?;
    let (rt0, rt1) = (
        ts - (r.lead_ms * 1000.0) as i64,
        ts + (r.tail_ms * 1000.0) as i64,
    );
    let rear = render(
        View::Rear,
        r.width,
        r.height,
        rt0,
        rt1,
        spec.micro_step_us,
        spec.noise.rear_rate_hz,
        spec.noise.contour_jitter_px,
        &mut rng,
        |t, o| spec.rear_shapes(tau(t), o),
        spec.trigger_us,
    )?;

    let first = crate::events::packet_floor(lt0);
    let lateral_centroids = (0..)
        .map(|k| first + k * crate::events::PACKET_US)
        .take_while(|&t| t < lt1)
        .map(|t| {
            let mid = t + crate::events::PACKET_US / 2;
            let c = spec.lateral_com(tau(mid));
            [mid as f64, c[0], c[1]]
        })
        .collect();
    let to_xy = |i: u32| [(i % r.width as u32) as u16, (i / r.width as u32) as u16];
    let racket_at = |t: i64| {
        coverage(
            &spec.rear_racket_shapes(tau(t), [0.0, 0.0]),
            r.width,
            r.height,
        )
    };
    // the impact packet's events are the diffs at its steps
    let open = crate::events::packet_floor(ts);
    let close = open + crate::events::PACKET_US - spec.micro_step_us;
    let racket_mask = racket_at(close).into_iter().map(to_xy).collect();
    let mut covered = Vec::new();
    let mut prev = racket_at(open - spec.micro_step_us);
    let mut t = open;
    while t <= close {
        let cur = racket_at(t);
        diff(&prev, &cur, |i, p| {
            if p > 0 {
                covered.push(i)
            }
        });
        prev = cur;
        t += spec.micro_step_us;
    }
    covered.sort_unstable();
    covered.dedup();
    let racket_events_mask = covered.into_iter().map(to_xy).collect();

    let truth = GroundTruth {
        t_impact_us: ts,
        u_mm: r.impact_uv_mm[0],
        v_mm: r.impact_uv_mm[1],
        speed_mps: l.outbound_speed_mps,
        total_speed_mps: l.outbound_speed_mps.hypot(l.out_of_plane_mps),
        rear_tip_px: spec.rear_tip_at_impact(),
        lateral_centroids,
        racket_mask,
        racket_events_mask,
    };
    Ok(Trial {
        lateral,
        rear,
        truth,
    })
}

/// Shuttle-only lateral stream (no racket) of `duration_ms`, for
/// calibrating swing thresholds. The shuttle stays in frame throughout.
pub fn generate_quiescent_stream(spec: &SceneSpec, duration_ms: f64) -> Result<EventStream> {
    let mut calm = spec.clone();
    calm.lateral.racket = false;
    let (width, height) = (calm.lateral.width, calm.lateral.height);
    // start near the top so the inbound path stays on the sensor
    let v = calm.lateral.inbound_px_per_ms;
    let start = [width as f64 * 0.5, 60.0];
    let end = [start[0] + v[0] * duration_ms, start[1] + v[1] * duration_ms];
    if end[1] >= height as f64 - 20.0 || end[0] < 20.0 || end[0] >= width as f64 - 20.0 {
        return Err(Error::Invalid(format!(
            "{duration_ms} ms of inbound flight leaves the frame"
        )));
    }
    // place the impact after the stream so only inbound flight is rendered
    calm.lateral.impact_px = end;
    calm.lateral.lead_ms = duration_ms;
    calm.lateral.tail_ms = 0.001;
    let mut rng = ChaCha8Rng::seed_from_u64(calm.seed ^ 0x5157_ea11);
    let ts = calm.t_impact_us;
    let t0 = ts - (duration_ms * 1000.0) as i64;
    render(
        View::Lateral,
        width,
        height,
        t0,
        ts,
        calm.micro_step_us,
        calm.noise.lateral_rate_hz,
        calm.noise.contour_jitter_px,
        &mut rng,
        |t, o| calm.lateral_shapes((t - ts) as f64 / 1000.0, o),
        None,
    )
}
