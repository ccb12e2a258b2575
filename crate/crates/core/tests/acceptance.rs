//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::PI;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};

use smashcam::agreement::{bland_altman, pearson_p, zou_ci, PairedMeasurements, LOA_Z};
use smashcam::events::{accumulate, packetize, Event, EventStream, View, PACKET_US};
use smashcam::impact_time::{detect_inflection, TimerConfig, TrackPoint};
use smashcam::io::{parse_events, to_binary, to_csv, Format};
use smashcam::locate::{fit_ellipse, fit_shaft, EllipseParams, LocationStatus, RansacConfig};
use smashcam::pipeline::{
    run_batch, write_batch, write_synth, BatchResult, Manifest, PipelineConfig,
};
use smashcam::swing::{sliding_stats, RateSeries};
use smashcam::synth::{FailureMode, FailureShare, PlannedTrial, SynthPlan};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn synth_and_run(plan: &SynthPlan, dir: &Path) -> (Vec<PlannedTrial>, BatchResult) {
    let synth = write_synth(plan, dir).expect("synth");
    let manifest = Manifest::load(&synth.manifest_path).expect("manifest");
    let cfg = PipelineConfig::load(&synth.config_path).expect("config");
    let res = run_batch(&manifest, &cfg).expect("batch");
    (plan.trials().expect("plan"), res)
}

fn pct(k: usize, n: usize) -> f64 {
    100.0 * k as f64 / n as f64
}

fn end_to_end() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let plan = SynthPlan {
        seed: 2024,
        trials: 50,
        participants: 5,
        speed_mps: [40.0, 60.0],
        ..SynthPlan::default()
    };
    let (planned, res) = synth_and_run(&plan, dir.path());
    let elapsed = start.elapsed().as_secs_f64();

    let (mut time_ok, mut loc_ok, mut speed_ok) = (0, 0, 0);
    for (p, r) in planned.iter().zip(&res.reports) {
        if let Some(i) = &r.impact {
            time_ok += ((i.t_impact_us - p.spec.t_impact_us).abs() <= 1000) as usize;
        }
        let coords = r
            .location
            .as_ref()
            .filter(|l| l.status == LocationStatus::Success)
            .and_then(|l| l.coords);
        if let Some(c) = coords {
            let [u, v] = p.spec.rear.impact_uv_mm;
            loc_ok += ((c.u - u).abs() <= 4.0 && (c.v - v).abs() <= 4.0) as usize;
        }
        if let Some(s) = r.speed_mps() {
            let truth = p.spec.lateral.outbound_speed_mps;
            speed_ok += ((s - truth).abs() / truth <= 0.02) as usize;
        }
    }
    let n = planned.len();
    let pass = pct(time_ok, n) >= 95.0
        && pct(loc_ok, n) >= 90.0
        && pct(speed_ok, n) >= 95.0
        && elapsed < 60.0;
    outcome(
        pass,
        format!(
            "time ±1 ms {time_ok}/{n}, location ±4 mm {loc_ok}/{n}, speed ±2% {speed_ok}/{n}, {elapsed:.1} s"
        ),
    )
}

fn failure_classification() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let plan = SynthPlan {
        seed: 77,
        trials: 100,
        participants: 5,
        failures: vec![
            FailureShare {
                mode: FailureMode::TipOutsideFace,
                fraction: 0.05,
            },
            FailureShare {
                mode: FailureMode::ShaftAngleInvalid,
                fraction: 0.05,
            },
        ],
        ..SynthPlan::default()
    };
    let (planned, res) = synth_and_run(&plan, dir.path());

    let mut correct = 0;
    for (p, r) in planned.iter().zip(&res.reports) {
        let expected = match p.failure {
            None => LocationStatus::Success,
            Some(FailureMode::TipOutsideFace) => LocationStatus::TipOutsideFace,
            Some(FailureMode::ShaftAngleInvalid) => LocationStatus::ShaftAngleInvalid,
        };
        correct += (r.location.as_ref().map(|l| l.status) == Some(expected)) as usize;
    }
    let mut rates_match = true;
    for (participant, t) in &res.summary.per_participant {
        let mine: Vec<_> = planned
            .iter()
            .filter(|p| &p.participant == participant)
            .collect();
        let ok = mine.iter().filter(|p| p.failure.is_none()).count();
        rates_match &= t.location.total == mine.len() && t.location.succeeded == ok;
    }
    let s = &res.summary.overall;
    rates_match &=
        s.location.succeeded == 90 && s.time.succeeded == 100 && s.speed.succeeded == 100;
    let per: Vec<String> = res
        .summary
        .per_participant
        .iter()
        .map(|(p, t)| format!("{p} {}/{}", t.location.succeeded, t.location.total))
        .collect();
    outcome(
        correct == planned.len() && rates_match,
        format!(
            "classified {correct}/{}, location {}/{} ({}), time {}/{}, speed {}/{}",
            planned.len(),
            s.location.succeeded,
            s.location.total,
            per.join(", "),
            s.time.succeeded,
            s.time.total,
            s.speed.succeeded,
            s.speed.total
        ),
    )
}

fn bland_altman_fixed_points() -> Outcome {
    // (EV mean, HS mean, expected bias, tolerance)
    let cases = [
        (-29.39, -31.23, 1.84, 1e-9),
        (-24.43, -27.89, 3.45, 0.01),
        (-17.05, -15.13, -1.92, 1e-9),
        (51.66, 52.64, -1.00, 0.02),
    ];
    let ev_off = [-1.5, 0.5, 2.0, -0.25, -0.75];
    let hs_off = [0.4, -2.0, 0.6, 1.5, -0.5];
    let mut pass = true;
    let mut biases = Vec::new();
    for (ev_mean, hs_mean, expected, tol) in cases {
        let mut p = PairedMeasurements::new();
        for (a, b) in ev_off.iter().zip(&hs_off) {
            p.push("P1", ev_mean + a, hs_mean + b);
        }
        let bias = bland_altman(&p).unwrap().bias;
        pass &= (bias - expected).abs() <= tol + 1e-12;
        biases.push(format!("{bias:.2}"));
    }
    let p1 = pearson_p(0.013, 124);
    let p2 = pearson_p(0.045, 116);
    pass &= (p1 - 0.88).abs() <= 0.01 && (p2 - 0.63).abs() <= 0.01;
    outcome(
        pass,
        format!("bias {}, p {p1:.3} and {p2:.3}", biases.join(" ")),
    )
}

fn zou_coverage() -> Outcome {
    let start = Instant::now();
    let (k, m, mu, sb, sw) = (5, 25, 1.84, 0.6, 1.2);
    let sd = f64::sqrt(sb * sb + sw * sw);
    let (lo, hi) = (mu - LOA_Z * sd, mu + LOA_Z * sd);
    let between = Normal::new(0.0, sb).unwrap();
    let within = Normal::new(0.0, sw).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let reps = 2000;
    let (mut hit_lo, mut hit_hi) = (0, 0);
    for _ in 0..reps {
        let mut p = PairedMeasurements::new();
        for i in 0..k {
            let b = between.sample(&mut rng);
            for _ in 0..m {
                let hs: f64 = rng.random_range(-40.0..-20.0);
                p.push(format!("P{i}"), hs + mu + b + within.sample(&mut rng), hs);
            }
        }
        let ci = zou_ci(&p, 0.95).unwrap();
        hit_lo += (ci.ci_loa_low[0] <= lo && lo <= ci.ci_loa_low[1]) as usize;
        hit_hi += (ci.ci_loa_high[0] <= hi && hi <= ci.ci_loa_high[1]) as usize;
    }
    let (c_lo, c_hi) = (pct(hit_lo, reps), pct(hit_hi, reps));
    let elapsed = start.elapsed().as_secs_f64();
    let inside = |c: f64| (93.0..=97.0).contains(&c);
    outcome(
        inside(c_lo) && inside(c_hi) && elapsed < 300.0,
        format!("lower LoA {c_lo:.1}%, upper LoA {c_hi:.1}%, {elapsed:.2} s"),
    )
}

fn ellipse_points(e: &EllipseParams, n: usize) -> Vec<(f64, f64)> {
    // theta is measured from vertical, so the major axis direction is
    // (sin θ, −cos θ) in image coordinates
    let (s, c) = e.theta.sin_cos();
    (0..n)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / n as f64;
            let (p, q) = (e.a * t.cos(), e.b * t.sin());
            (e.cx + p * s + q * c, e.cy - p * c + q * s)
        })
        .collect()
}

fn random_ellipse(rng: &mut ChaCha8Rng) -> EllipseParams {
    let a = rng.random_range(60.0..150.0);
    EllipseParams {
        cx: rng.random_range(300.0..900.0),
        cy: rng.random_range(200.0..500.0),
        a,
        b: a * rng.random_range(0.6..0.9),
        theta: rng.random_range(-0.5..0.5),
    }
}

fn geometry() -> Outcome {
    let mut exact = 0;
    let mut quant = 0;
    let mut ransac = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = random_ellipse(&mut rng);
        let pts = ellipse_points(&e, 90);
        if let Ok(f) = fit_ellipse(&pts) {
            let rel = |x: f64, y: f64| (x - y).abs() / y.abs().max(1.0);
            let ok = rel(f.cx, e.cx) < 1e-6
                && rel(f.cy, e.cy) < 1e-6
                && rel(f.a, e.a) < 1e-6
                && rel(f.b, e.b) < 1e-6
                && (f.theta - e.theta).abs() < 1e-6;
            exact += ok as usize;
        }
        let rounded: Vec<(f64, f64)> = ellipse_points(&e, 720)
            .iter()
            .map(|p| (p.0.round(), p.1.round()))
            .collect();
        if let Ok(f) = fit_ellipse(&rounded) {
            let ok = (f.cx - e.cx).hypot(f.cy - e.cy) <= 1.0
                && (f.a - e.a).abs() <= 2.0
                && (f.b - e.b).abs() <= 2.0;
            quant += ok as usize;
        }

        // shaft with 30% outliers
        let truth: f64 = rng.random_range(-40f64..40.0).to_radians();
        let (ux, uy) = (truth.sin(), -truth.cos());
        let jitter = Uniform::new(-0.5, 0.5).unwrap();
        let mut pts = Vec::new();
        for i in 0..140 {
            let s = i as f64;
            pts.push((
                300.0 + s * ux + jitter.sample(&mut rng),
                400.0 + s * uy + jitter.sample(&mut rng),
            ));
        }
        for _ in 0..60 {
            pts.push((
                rng.random_range(150.0..450.0),
                rng.random_range(220.0..420.0),
            ));
        }
        if let Some(s) = fit_shaft(
            &pts,
            &RansacConfig {
                seed,
                ..RansacConfig::default()
            },
        ) {
            ransac += ((s.phi - truth).abs() < 1f64.to_radians()) as usize;
        }
    }
    outcome(
        exact == 100 && quant == 100 && ransac == 100,
        format!("noiseless ellipse {exact}/100, quantized ellipse {quant}/100, RANSAC within 1° {ransac}/100"),
    )
}

fn hinge(break_us: i64, s0: f64, s1: f64, noise: Option<(u64, f64)>) -> Vec<TrackPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(noise.map_or(0, |n| n.0));
    let normal = Normal::new(0.0, noise.map_or(0.0, |n| n.1)).unwrap();
    (0..200)
        .map(|i| {
            let t = 250 + 500 * i as i64;
            let t_ms = t as f64 / 1000.0;
            let b_ms = break_us as f64 / 1000.0;
            let x = 400.0 + s0 * t_ms + (s1 - s0) * (t_ms - b_ms).max(0.0);
            TrackPoint {
                t,
                x: x + normal.sample(&mut rng),
                y: 200.0,
                support: 10,
            }
        })
        .collect()
}

fn change_point() -> Outcome {
    let cfg = TimerConfig::default();
    let mut exact = 0;
    let mut noisy = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // breaks on the candidate grid (midpoints between track points)
        let b = PACKET_US * rng.random_range(60..140i64);
        let s0 = rng.random_range(-1.0..1.0);
        let s1 = rng.random_range(3.0..8.0);
        if let Ok(it) = detect_inflection(&hinge(b, s0, s1, None), &cfg) {
            exact += (it.t_impact == b) as usize;
        }
        if let Ok(it) = detect_inflection(&hinge(b, s0, s1, Some((seed + 500, 1.0))), &cfg) {
            noisy += ((it.t_impact - b).abs() <= 1000) as usize;
        }
    }
    outcome(
        exact == 100 && noisy >= 95,
        format!("noiseless exact {exact}/100, σ = 1 px within ±1 ms {noisy}/100"),
    )
}

fn random_stream(rng: &mut ChaCha8Rng) -> EventStream {
    let n = rng.random_range(0..400);
    let mut t: i64 = rng.random_range(-5_000..5_000);
    let mut events = Vec::with_capacity(n);
    for _ in 0..n {
        t += rng.random_range(0..700);
        events.push(Event::new(
            t,
            rng.random_range(0..64),
            rng.random_range(0..48),
            if rng.random_bool(0.5) { 1 } else { -1 },
        ));
    }
    EventStream::new(
        View::Rear,
        64,
        48,
        rng.random_bool(0.5).then_some(t / 2),
        events,
    )
    .unwrap()
}

fn stream_core() -> Outcome {
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..1000 {
        let s = random_stream(&mut rng);
        let packets = packetize(&s);
        // tiling: contiguous bins, each event in its bin, nothing lost
        let total: usize = packets.iter().map(|p| p.count()).sum();
        let contiguous = packets
            .windows(2)
            .all(|w| w[1].t_start == w[0].t_start + PACKET_US);
        let inside = packets
            .iter()
            .all(|p| p.events.iter().all(|e| p.contains(e.t)));
        if total != s.len() || !contiguous || !inside {
            failures.push(format!("tiling #{i}"));
        }
        // additivity over adjacent windows
        if let Some((t0, t1)) = s.time_range() {
            let mid = rng.random_range(t0..=t1 + 1);
            let whole = accumulate(&s, t0, t1 + 1 - t0, None).unwrap();
            let parts = if mid > t0 && mid <= t1 {
                accumulate(&s, t0, mid - t0, None)
                    .unwrap()
                    .sum(&accumulate(&s, mid, t1 + 1 - mid, None).unwrap())
            } else {
                whole.clone()
            };
            if whole.data() != parts.data() {
                failures.push(format!("additivity #{i}"));
            }
        }
        // round trips
        let bin = parse_events(&to_binary(&s), Format::Binary).unwrap();
        let csv = parse_events(to_csv(&s).as_bytes(), Format::Csv).unwrap();
        if bin != s || csv.events() != s.events() {
            failures.push(format!("round trip #{i}"));
        }
    }

    // throughput: packetize and sliding statistics over 10^7 events
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut t = 0i64;
    let events: Vec<Event> = (0..10_000_000)
        .map(|_| {
            t += rng.random_range(0..3);
            Event::new(t, rng.random_range(0..1280), rng.random_range(0..720), 1)
        })
        .collect();
    let big = EventStream::new(View::Lateral, 1280, 720, None, events).unwrap();
    let start = Instant::now();
    let rates = RateSeries::from_packets(&packetize(&big));
    let stats = sliding_stats(&rates, 200).unwrap();
    let secs = start.elapsed().as_secs_f64();
    assert!(!stats.is_empty());
    let goal = if secs < 1.0 {
        "met"
    } else {
        "missed, not enforced"
    };

    outcome(
        failures.is_empty(),
        format!(
            "1000 streams: {} property failures{}; 10^7 events in {secs:.3} s (goal < 1 s {goal})",
            failures.len(),
            failures
                .first()
                .map_or(String::new(), |f| format!(" (first: {f})"))
        ),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let plan = SynthPlan {
        seed: 8,
        trials: 12,
        participants: 3,
        failures: vec![FailureShare {
            mode: FailureMode::TipOutsideFace,
            fraction: 0.1,
        }],
        ..SynthPlan::default()
    };
    let data = dir.path().join("data");
    let synth = write_synth(&plan, &data).unwrap();
    let manifest = Manifest::load(&synth.manifest_path).unwrap();
    let cfg = PipelineConfig::load(&synth.config_path).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    write_batch(&a, &run_batch(&manifest, &cfg).unwrap()).unwrap();
    write_batch(&b, &run_batch(&manifest, &cfg).unwrap()).unwrap();

    let mut files = vec!["summary.json".to_string(), "pairs.csv".to_string()];
    for sub in ["trials", "agreement"] {
        for e in std::fs::read_dir(a.join(sub)).unwrap() {
            files.push(format!(
                "{sub}/{}",
                e.unwrap().file_name().to_string_lossy()
            ));
        }
    }
    let differing: Vec<&String> = files
        .iter()
        .filter(|f| std::fs::read(a.join(f)).ok() != std::fs::read(b.join(f)).ok())
        .collect();
    outcome(
        differing.is_empty(),
        format!(
            "{} deterministic files compared, {} differ",
            files.len(),
            differing.len()
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("end-to-end synthetic recovery", end_to_end),
        ("failure classification", failure_classification),
        ("Bland-Altman fixed points", bland_altman_fixed_points),
        ("Zou CI coverage", zou_coverage),
        ("geometry oracles", geometry),
        ("change-point oracle", change_point),
        ("stream-core properties", stream_core),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let res = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        failed += !res.pass as usize;
        println!(
            "{} criterion {}: {name}: {}",
            if res.pass { "PASS" } else { "FAIL" },
            i + 1,
            res.detail
        );
    }
    if failed > 0 {
        println!("{failed} of {} acceptance criteria failed", criteria.len());
        ExitCode::FAILURE
    } else {
        println!("all {} acceptance criteria passed", criteria.len());
        ExitCode::SUCCESS
    }
}
