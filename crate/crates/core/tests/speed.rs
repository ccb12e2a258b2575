use proptest::prelude::*;
use smashcam::calibration::Calibration;
use smashcam::events::{Event, EventStream};
use smashcam::impact_time::{estimate_impact_time, ImpactTime, TimerConfig};
use smashcam::speed::{estimate_speed, speed_from_displacement, SpeedConfig, SpeedResult};
use smashcam::swing::SwingInterval;
use smashcam::synth::{generate_trial, SceneSpec, Trial};

fn trial(seed: u64, speed_mps: f64, out_of_plane_mps: f64) -> (SceneSpec, Trial) {
    let mut spec = SceneSpec {
        seed,
        ..SceneSpec::default()
    };
    spec.lateral.outbound_speed_mps = speed_mps;
    spec.lateral.out_of_plane_mps = out_of_plane_mps;
    let t = generate_trial(&spec).unwrap();
    (spec, t)
}

fn impact(trial: &Trial) -> ImpactTime {
    let interval = SwingInterval::starting_at(trial.truth.t_impact_us - 60_000);
    estimate_impact_time(&trial.lateral, &interval, &TimerConfig::default())
        .unwrap()
        .0
}

fn speed(stream: &EventStream, impact: &ImpactTime, cal: &Calibration) -> SpeedResult {
    estimate_speed(stream, impact, cal, &SpeedConfig::default()).unwrap()
}

/// Rendered cork tip `tau_ms` after impact: the leading point of the cork
/// disc along the flight direction.
fn rendered_tip(spec: &SceneSpec, tau_ms: f64) -> [f64; 2] {
    let c = spec.lateral_cork(tau_ms);
    let axis = spec.lateral_axis(tau_ms);
    let r = spec.shuttle.cork_diameter_mm / 2.0 / spec.lateral.mm_per_px;
    [c[0] - axis[0] * r, c[1] - axis[1] * r]
}

#[test]
fn in_plane_speed_recovered() {
    for (seed, v) in [(1, 52.0), (2, 40.0), (3, 60.0), (4, 47.5)] {
        let (_, t) = trial(seed, v, 0.0);
        let s = speed(&t.lateral, &impact(&t), &Calibration::default()).speed;
        assert!((s - v).abs() <= 0.02 * v, "seed {seed}: {s} vs {v}");
    }
}

#[test]
fn tips_lie_on_rendered_tip() {
    let (spec, t) = trial(6, 52.0, 0.0);
    let imp = impact(&t);
    let res = speed(&t.lateral, &imp, &Calibration::default());
    let cfg = SpeedConfig::default();
    let off = (imp.t_impact - spec.t_impact_us) as f64 / 1000.0;
    for (px, ms) in [
        (res.pixel_tips[0], cfg.offset1_ms),
        (res.pixel_tips[1], cfg.offset2_ms),
    ] {
        // the leading pixel is where the cork has got to by the window's end
        let truth = rendered_tip(&spec, off + ms + cfg.accum_ms);
        let d = (px[0] as f64 - truth[0]).hypot(px[1] as f64 - truth[1]);
        assert!(d <= 2.0, "+{ms} ms: {px:?} vs {truth:?}");
    }
}

#[test]
fn out_of_plane_motion_is_not_seen() {
    let (spec, t) = trial(7, 50.0, 20.0);
    let s = speed(&t.lateral, &impact(&t), &Calibration::default()).speed;
    assert!((s - 50.0).abs() <= 1.0, "{s}");
    assert!(s < t.truth.total_speed_mps - 2.0);
    assert_eq!(t.truth.speed_mps, spec.lateral.outbound_speed_mps);
}

#[test]
fn speed_scales_with_calibration() {
    let (_, t) = trial(8, 52.0, 0.0);
    let imp = impact(&t);
    let base = Calibration::default();
    let a = speed(&t.lateral, &imp, &base);
    for k in [2.0, 0.5, 3.3] {
        let cal = Calibration {
            lateral_mm_per_px: k * base.lateral_mm_per_px,
            ..base
        };
        let b = speed(&t.lateral, &imp, &cal);
        assert_eq!(a.displacement_px, b.displacement_px);
        assert!(
            (b.speed - k * a.speed).abs() <= 1e-9 * b.speed,
            "{k}: {} vs {}",
            b.speed,
            a.speed
        );
    }
}

fn mapped(stream: &EventStream, w: u16, h: u16, f: impl Fn(u16, u16) -> (u16, u16)) -> EventStream {
    let mut events: Vec<Event> = stream
        .events()
        .iter()
        .map(|e| {
            let (x, y) = f(e.x, e.y);
            Event::new(e.t, x, y, e.p)
        })
        .collect();
    events.sort_by_key(|e| (e.t, e.y, e.x, e.p));
    EventStream::new(stream.view, w, h, stream.trigger_t, events).unwrap()
}

/// Lateral events of a noise-free trial, kept to the post-impact frames.
fn clean_post_impact(seed: u64) -> (Trial, ImpactTime) {
    let mut spec = SceneSpec {
        seed,
        ..SceneSpec::default()
    };
    spec.noise.lateral_rate_hz = 0.0;
    let mut t = generate_trial(&spec).unwrap();
    let imp = impact(&t);
    let s = &t.lateral;
    let late = s.window(imp.t_impact + 25_000, i64::MAX).to_vec();
    t.lateral = EventStream::new(s.view, s.width, s.height, s.trigger_t, late).unwrap();
    (t, imp)
}

#[test]
fn translation_leaves_speed_unchanged() {
    let (t, imp) = clean_post_impact(9);
    let cal = Calibration::default();
    let a = speed(&t.lateral, &imp, &cal);
    let s = &t.lateral;
    for (dx, dy) in [(-40i32, 25i32), (30, -60)] {
        let moved = mapped(s, s.width, s.height, |x, y| {
            ((x as i32 + dx) as u16, (y as i32 + dy) as u16)
        });
        let mut imp2 = imp.clone();
        imp2.impact_xy = [imp.impact_xy[0] + dx as f64, imp.impact_xy[1] + dy as f64];
        let b = speed(&moved, &imp2, &cal);
        assert!(
            (a.speed - b.speed).abs() < 1e-9,
            "({dx}, {dy}): {} vs {}",
            b.speed,
            a.speed
        );
    }
}

#[test]
fn quarter_turn_leaves_speed_unchanged() {
    let (t, imp) = clean_post_impact(10);
    let cal = Calibration::default();
    let a = speed(&t.lateral, &imp, &cal);
    let s = &t.lateral;
    let h = s.height;
    // (x, y) -> (h - 1 - y, x) on a sensor of swapped dimensions
    let turned = mapped(s, s.height, s.width, |x, y| (h - 1 - y, x));
    let mut imp2 = imp.clone();
    imp2.impact_xy = [(h - 1) as f64 - imp.impact_xy[1], imp.impact_xy[0]];
    imp2.post_velocity = [-imp.post_velocity[1], imp.post_velocity[0]];
    let b = speed(&turned, &imp2, &cal);
    assert!(
        (a.speed - b.speed).abs() < 1e-9,
        "{} vs {}",
        b.speed,
        a.speed
    );
}

proptest! {
    #[test]
    fn speed_nonnegative_and_zero_iff_tips_coincide(
        x0 in -500.0f64..500.0, y0 in -500.0f64..500.0,
        dx in prop_oneof![Just(0.0), -50.0f64..50.0],
        dy in prop_oneof![Just(0.0), -50.0f64..50.0],
        scale in 0.1f64..10.0,
    ) {
        let (x1, y1) = (x0 + dx, y0 + dy);
        let s = speed_from_displacement((x1 - x0).hypot(y1 - y0), scale, 2.0);
        prop_assert!(s >= 0.0);
        prop_assert_eq!(s == 0.0, x1 == x0 && y1 == y0);
    }

    #[test]
    fn speed_linear_in_scale(d in 0.0f64..100.0, scale in 0.1f64..10.0, k in 0.1f64..10.0) {
        let a = speed_from_displacement(d, scale, 2.0);
        let b = speed_from_displacement(d, k * scale, 2.0);
        prop_assert!((b - k * a).abs() <= 1e-12 * (1.0 + b.abs()));
    }
}
