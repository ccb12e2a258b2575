//! Batch orchestration: manifests in, per-trial reports and agreement out.
//!
//! Each trial runs swing detection and impact timing on the lateral view,
//! locates the impact on the rear view at that time, and measures the
//! outbound speed on the lateral view. Stage failures are recorded in the
//! report; they never abort the batch.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agreement::{self, AgreementReport, PairRecord};
use crate::calibration::Calibration;
use crate::error::{Error, Result};
use crate::events::{packetize, EventStream, View, PACKET_US};
use crate::impact_time::{estimate_impact_time, TimerConfig, TimingFailure};
use crate::io::{read_stream, write_stream, Format};
use crate::locate::{locate_impact, LocateConfig, LocationResult, LocationStatus};
use crate::speed::{estimate_speed, SpeedConfig, SpeedFailure, SpeedResult};
use crate::swing::{calibrate_thresholds, detect_swing, DetectorConfig, RateSeries, SwingInterval};
use crate::synth::{generate_quiescent_stream, generate_trial, SynthPlan};

pub const METRIC_TIME: &str = "impact_time_ms";
pub const METRIC_U: &str = "location_ml_mm";
pub const METRIC_V: &str = "location_long_mm";
pub const METRIC_SPEED: &str = "speed_mps";
pub const METRICS: [&str; 4] = [METRIC_TIME, METRIC_U, METRIC_V, METRIC_SPEED];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SwingSection {
    pub window_ms: f64,
    /// Calibrated from the stream's leading quiescent segment when absent.
    pub mean_threshold: Option<f64>,
    pub var_threshold: Option<f64>,
    pub refractory_ms: f64,
    pub k_mean: f64,
    pub k_var: f64,
    /// Length of the leading swing-free segment used for calibration, ms.
    pub quiescent_ms: f64,
}

impl Default for SwingSection {
    fn default() -> Self {
        Self {
            window_ms: 100.0,
            mean_threshold: None,
            var_threshold: None,
            refractory_ms: 300.0,
            k_mean: 6.0,
            k_var: 6.0,
            quiescent_ms: 100.0,
        }
    }
}

impl SwingSection {
    pub fn window_packets(&self) -> usize {
        (self.window_ms * 1000.0 / PACKET_US as f64).round() as usize
    }

    fn detector(&self, mean_threshold: f64, var_threshold: f64) -> DetectorConfig {
        DetectorConfig {
            window_packets: self.window_packets(),
            mean_threshold,
            var_threshold,
            refractory_us: (self.refractory_ms * 1000.0).round() as i64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let packets = self.window_ms * 1000.0 / PACKET_US as f64;
        if !(self.window_ms > 0.0) || (packets - packets.round()).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "swing.window_ms = {} is not a positive multiple of the packet length",
                self.window_ms
            )));
        }
        if self.mean_threshold.is_some() != self.var_threshold.is_some() {
            return Err(Error::Config(
                "set both swing.mean_threshold and swing.var_threshold, or neither".into(),
            ));
        }
        if !(self.refractory_ms >= 0.0
            && self.k_mean >= 0.0
            && self.k_var >= 0.0
            && self.quiescent_ms > 0.0)
        {
            return Err(Error::Config(
                "negative swing.refractory_ms, k or quiescent_ms".into(),
            ));
        }
        self.detector(
            self.mean_threshold.unwrap_or(0.0),
            self.var_threshold.unwrap_or(0.0),
        )
        .validate()
        .map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgreementSection {
    pub level: f64,
}

impl Default for AgreementSection {
    fn default() -> Self {
        Self { level: 0.95 }
    }
}

/// Analysis settings, read from TOML. Every key has a default and unknown
/// keys are rejected.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub swing: SwingSection,
    pub impact: TimerConfig,
    pub locate: LocateConfig,
    pub speed: SpeedConfig,
    pub agreement: AgreementSection,
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.swing.validate()?;
        self.locate.validate()?;
        self.speed.validate()?;
        let level = self.agreement.level;
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::Config(format!(
                "agreement.level = {level} not in (0, 1)"
            )));
        }
        Ok(())
    }
}

/// Reference (HS) values in the units of the report.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Reference {
    /// Impact time relative to the trigger, ms.
    pub impact_time_ms: Option<f64>,
    pub u_mm: Option<f64>,
    pub v_mm: Option<f64>,
    pub speed_mps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialEntry {
    pub id: String,
    pub participant: String,
    /// Relative paths resolve against the manifest's directory.
    pub lateral: PathBuf,
    pub rear: PathBuf,
    #[serde(default)]
    pub calibration: Calibration,
    #[serde(default)]
    pub reference: Option<Reference>,
    /// RANSAC seed for this trial.
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default, rename = "trial")]
    pub trials: Vec<TrialEntry>,
    /// Directory that relative stream paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Manifest {
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut m: Self =
            toml::from_str(text).map_err(|e| Error::Config(format!("manifest: {e}")))?;
        m.base_dir = base_dir.to_path_buf();
        let mut seen = std::collections::BTreeSet::new();
        for t in &m.trials {
            if !seen.insert(t.id.as_str()) {
                return Err(Error::Config(format!(
                    "manifest: duplicate trial id '{}'",
                    t.id
                )));
            }
        }
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, base)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    /// Swing found and the impact timed; later stages report separately.
    Analyzed,
    /// No swing interval, or the impact could not be timed.
    Unanalyzable,
    /// Inputs could not be read.
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactSummary {
    pub t_impact_us: i64,
    /// Present iff the lateral stream carries a trigger mark.
    pub t_rel_trigger_ms: Option<f64>,
    pub pre_slope: f64,
    pub post_slope: f64,
    pub breakpoint_residual: f64,
    pub impact_xy: [f64; 2],
    pub post_velocity: [f64; 2],
    pub track_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SpeedOutcome {
    Success(SpeedResult),
    Failed { reason: SpeedFailure },
}

/// Deterministic per-trial output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactReport {
    pub trial: String,
    pub participant: String,
    pub status: TrialStatus,
    pub error: Option<String>,
    pub swing: Option<SwingInterval>,
    pub swing_count: usize,
    pub thresholds: Option<[f64; 2]>,
    pub impact: Option<ImpactSummary>,
    pub timing_failure: Option<TimingFailure>,
    pub location: Option<LocationResult>,
    pub speed: Option<SpeedOutcome>,
    pub reference: Option<Reference>,
}

impl ImpactReport {
    fn new(entry: &TrialEntry) -> Self {
        Self {
            trial: entry.id.clone(),
            participant: entry.participant.clone(),
            status: TrialStatus::Error,
            error: None,
            swing: None,
            swing_count: 0,
            thresholds: None,
            impact: None,
            timing_failure: None,
            location: None,
            speed: None,
            reference: entry.reference,
        }
    }

    pub fn time_ms(&self) -> Option<f64> {
        self.impact.as_ref().and_then(|i| i.t_rel_trigger_ms)
    }

    pub fn location_ok(&self) -> bool {
        self.location
            .as_ref()
            .is_some_and(|l| l.status == LocationStatus::Success)
    }

    pub fn speed_mps(&self) -> Option<f64> {
        match &self.speed {
            Some(SpeedOutcome::Success(s)) => Some(s.speed),
            _ => None,
        }
    }

    fn metric(&self, metric: &str) -> Option<f64> {
        let coords = self
            .location
            .as_ref()
            .filter(|l| l.status == LocationStatus::Success)
            .and_then(|l| l.coords);
        match metric {
            METRIC_TIME => self.time_ms(),
            METRIC_U => coords.map(|c| c.u),
            METRIC_V => coords.map(|c| c.v),
            METRIC_SPEED => self.speed_mps(),
            _ => None,
        }
    }
}

/// Wall-clock stage durations, ms. Kept apart from the reports so those
/// stay byte-reproducible.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub load_ms: f64,
    pub swing_ms: f64,
    pub impact_ms: f64,
    pub locate_ms: f64,
    pub speed_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutput {
    pub report: ImpactReport,
    pub timings: StageTimings,
}

fn elapsed_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1000.0
}

fn load_view(path: &Path, view: View) -> Result<EventStream> {
    let s = read_stream(path)?;
    if s.view != view {
        return Err(Error::Invalid(format!(
            "{}: expected a {} stream, found {}",
            path.display(),
            view.as_str(),
            s.view.as_str()
        )));
    }
    Ok(s)
}

/// Swing thresholds from the config, or from the stream's leading segment.
fn thresholds(rates: &RateSeries, cfg: &SwingSection) -> Result<(f64, f64)> {
    match (cfg.mean_threshold, cfg.var_threshold) {
        (Some(m), Some(v)) => Ok((m, v)),
        _ => {
            let t0 = rates.t_start;
            let quiet = rates.slice_time(t0, t0 + (cfg.quiescent_ms * 1000.0) as i64);
            calibrate_thresholds(&quiet, cfg.window_packets(), cfg.k_mean, cfg.k_var)
        }
    }
}

/// Runs one trial. Never panics on bad input; failures land in the report.
pub fn run_trial(entry: &TrialEntry, manifest: &Manifest, cfg: &PipelineConfig) -> TrialOutput {
    let mut report = ImpactReport::new(entry);
    let mut timings = StageTimings::default();

    let t = Instant::now();
    let streams = entry.calibration.validate().and_then(|_| {
        let lateral = load_view(&manifest.resolve(&entry.lateral), View::Lateral)?;
        let rear = load_view(&manifest.resolve(&entry.rear), View::Rear)?;
        Ok((lateral, rear))
    });
    timings.load_ms = elapsed_ms(t);
    let (lateral, rear) = match streams {
        Ok(s) => s,
        Err(e) => {
            report.error = Some(e.to_string());
            return TrialOutput { report, timings };
        }
    };

    let t = Instant::now();
    let rates = RateSeries::from_packets(&packetize(&lateral));
    let swings = thresholds(&rates, &cfg.swing).and_then(|(m, v)| {
        report.thresholds = Some([m, v]);
        detect_swing(&rates, &cfg.swing.detector(m, v))
    });
    timings.swing_ms = elapsed_ms(t);
    let swings = match swings {
        Ok(s) => s,
        Err(e) => {
            report.error = Some(e.to_string());
            return TrialOutput { report, timings };
        }
    };
    report.swing_count = swings.len();
    report.status = TrialStatus::Unanalyzable;
    let Some(&interval) = swings.first() else {
        report.error = Some("no swing detected".into());
        return TrialOutput { report, timings };
    };
    report.swing = Some(interval);

    let t = Instant::now();
    let timed = estimate_impact_time(&lateral, &interval, &cfg.impact);
    timings.impact_ms = elapsed_ms(t);
    let (impact, track) = match timed {
        Ok(v) => v,
        Err(f) => {
            report.timing_failure = Some(f);
            return TrialOutput { report, timings };
        }
    };
    report.status = TrialStatus::Analyzed;
    report.impact = Some(ImpactSummary {
        t_impact_us: impact.t_impact,
        t_rel_trigger_ms: lateral
            .trigger_t
            .map(|tr| (impact.t_impact - tr) as f64 / 1000.0),
        pre_slope: impact.pre_slope,
        post_slope: impact.post_slope,
        breakpoint_residual: impact.breakpoint_residual,
        impact_xy: impact.impact_xy,
        post_velocity: impact.post_velocity,
        track_points: track.len(),
    });

    let t = Instant::now();
    let locate_cfg = LocateConfig {
        ransac_seed: entry.seed,
        ..cfg.locate
    };
    report.location = Some(locate_impact(
        &rear,
        impact.t_impact,
        &entry.calibration,
        &locate_cfg,
    ));
    timings.locate_ms = elapsed_ms(t);

    let t = Instant::now();
    report.speed = Some(
        match estimate_speed(&lateral, &impact, &entry.calibration, &cfg.speed) {
            Ok(s) => SpeedOutcome::Success(s),
            Err(reason) => SpeedOutcome::Failed { reason },
        },
    );
    timings.speed_ms = elapsed_ms(t);

    TrialOutput { report, timings }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub succeeded: usize,
    pub total: usize,
}

impl Tally {
    fn add(&mut self, ok: bool) {
        self.total += 1;
        self.succeeded += ok as usize;
    }

    pub fn failed(&self) -> usize {
        self.total - self.succeeded
    }

    pub fn rate(&self) -> Option<f64> {
        (self.total > 0).then(|| self.succeeded as f64 / self.total as f64)
    }
}

/// Success counts per metric. Every trial counts toward every total.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricTallies {
    pub time: Tally,
    pub location: Tally,
    pub speed: Tally,
}

impl MetricTallies {
    fn add(&mut self, r: &ImpactReport) {
        self.time.add(r.status == TrialStatus::Analyzed);
        self.location.add(r.location_ok());
        self.speed.add(r.speed_mps().is_some());
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub trials: usize,
    pub analyzed: usize,
    pub overall: MetricTallies,
    pub per_participant: BTreeMap<String, MetricTallies>,
    /// Trials per location status, plus `not_run` for trials that never
    /// reached the locator.
    pub location_status: BTreeMap<String, usize>,
    /// Trial id to error text, for trials that could not be read or timed.
    pub errors: BTreeMap<String, String>,
}

impl BatchSummary {
    pub fn from_reports(reports: &[ImpactReport]) -> Self {
        let mut s = Self {
            trials: reports.len(),
            ..Self::default()
        };
        for r in reports {
            s.analyzed += (r.status == TrialStatus::Analyzed) as usize;
            s.overall.add(r);
            s.per_participant
                .entry(r.participant.clone())
                .or_default()
                .add(r);
            let key = r.location.as_ref().map_or("not_run", |l| l.status.as_str());
            *s.location_status.entry(key.to_string()).or_default() += 1;
            let err = r
                .error
                .clone()
                .or_else(|| r.timing_failure.as_ref().map(|f| f.to_string()));
            if let Some(e) = err {
                s.errors.insert(r.trial.clone(), e);
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    /// In manifest order.
    pub reports: Vec<ImpactReport>,
    pub timings: Vec<(String, StageTimings)>,
    pub summary: BatchSummary,
    pub agreement: Option<AgreementReport>,
}

impl BatchResult {
    pub fn analyzed(&self) -> usize {
        self.summary.analyzed
    }
}

/// EV/HS pairs for every metric of every trial with a reference.
pub fn pair_records(reports: &[ImpactReport]) -> Vec<PairRecord> {
    let mut out = Vec::new();
    for r in reports {
        let Some(reference) = r.reference else {
            continue;
        };
        let hs = [
            reference.impact_time_ms,
            reference.u_mm,
            reference.v_mm,
            reference.speed_mps,
        ];
        for (metric, hs) in METRICS.iter().zip(hs) {
            out.push(PairRecord {
                participant: r.participant.clone(),
                trial: r.trial.clone(),
                metric: metric.to_string(),
                ev: r.metric(metric),
                hs,
            });
        }
    }
    out
}

/// Processes every trial in parallel. Reports come back in manifest order.
pub fn run_batch(manifest: &Manifest, cfg: &PipelineConfig) -> Result<BatchResult> {
    cfg.validate()?;
    let outputs: Vec<TrialOutput> = manifest
        .trials
        .par_iter()
        .map(|entry| run_trial(entry, manifest, cfg))
        .collect();
    let timings = outputs
        .iter()
        .map(|o| (o.report.trial.clone(), o.timings))
        .collect();
    let reports: Vec<ImpactReport> = outputs.into_iter().map(|o| o.report).collect();
    let summary = BatchSummary::from_reports(&reports);
    let pairs = pair_records(&reports);
    let agreement =
        (!pairs.is_empty()).then(|| agreement::analyze_records(&pairs, cfg.agreement.level));
    Ok(BatchResult {
        reports,
        timings,
        summary,
        agreement,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes `trials/<id>.json`, `summary.json`, `timings.json` and, with
/// references, `pairs.csv` and `agreement/`.
pub fn write_batch(out: &Path, result: &BatchResult) -> Result<()> {
    let trials = out.join("trials");
    create_dir(&trials)?;
    for r in &result.reports {
        write_json(&trials.join(format!("{}.json", r.trial)), r)?;
    }
    write_json(&out.join("summary.json"), &result.summary)?;
    let timings: BTreeMap<&str, &StageTimings> = result
        .timings
        .iter()
        .map(|(k, v)| (k.as_str(), v))
        .collect();
    write_json(&out.join("timings.json"), &timings)?;
    if let Some(report) = &result.agreement {
        let pairs = pair_records(&result.reports);
        agreement::write_pairs_csv(&out.join("pairs.csv"), &pairs)?;
        agreement::write_report(&out.join("agreement"), report, &pairs)?;
    }
    Ok(())
}

/// Thresholds from the `[t0, t1)` µs segment of a stream.
pub fn calibrate_from_stream(
    stream: &EventStream,
    t0: i64,
    t1: i64,
    cfg: &SwingSection,
) -> Result<(f64, f64)> {
    if t1 <= t0 {
        return Err(Error::Invalid(format!("empty quiescent segment {t0}:{t1}")));
    }
    let rates = RateSeries::from_packets(&packetize(stream));
    calibrate_thresholds(
        &rates.slice_time(t0, t1),
        cfg.window_packets(),
        cfg.k_mean,
        cfg.k_var,
    )
}

/// What `write_synth` produced.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub manifest_path: PathBuf,
    pub config_path: PathBuf,
    pub trials: usize,
    pub thresholds: (f64, f64),
}

/// Length of the rendered calibration segment, ms.
const QUIESCENT_MS: f64 = 350.0;

/// Renders every trial of `plan` into `out`: binary streams, ground truth,
/// a manifest whose references are the ground truth, and a config whose
/// swing thresholds come from a rendered swing-free segment.
pub fn write_synth(plan: &SynthPlan, out: &Path) -> Result<SynthOutput> {
    let planned = plan.trials()?;
    let streams = out.join("streams");
    let truth_dir = out.join("truth");
    create_dir(&streams)?;
    create_dir(&truth_dir)?;

    let quiet = generate_quiescent_stream(&plan.base, QUIESCENT_MS)?;
    write_stream(
        &streams.join("quiescent_lateral.evb"),
        &quiet,
        Format::Binary,
    )?;
    let mut cfg = PipelineConfig::default();
    let rates = RateSeries::from_packets(&packetize(&quiet));
    let (m, v) = calibrate_thresholds(
        &rates,
        cfg.swing.window_packets(),
        cfg.swing.k_mean,
        cfg.swing.k_var,
    )?;
    cfg.swing.mean_threshold = Some(m);
    cfg.swing.var_threshold = Some(v);

    let entries: Vec<TrialEntry> = planned
        .par_iter()
        .map(|p| -> Result<TrialEntry> {
            let trial = generate_trial(&p.spec)?;
            let lateral = PathBuf::from("streams").join(format!("{}_lateral.evb", p.id));
            let rear = PathBuf::from("streams").join(format!("{}_rear.evb", p.id));
            write_stream(&out.join(&lateral), &trial.lateral, Format::Binary)?;
            write_stream(&out.join(&rear), &trial.rear, Format::Binary)?;
            write_json(
                &truth_dir.join(format!("{}.json", p.id)),
                &TruthFile::new(p, &trial.truth),
            )?;
            let t = &trial.truth;
            Ok(TrialEntry {
                id: p.id.clone(),
                participant: p.participant.clone(),
                lateral,
                rear,
                calibration: Calibration {
                    lateral_mm_per_px: p.spec.lateral.mm_per_px,
                    rear_mm_per_px: Some(p.spec.rear.mm_per_px),
                    ..Calibration::default()
                },
                reference: Some(Reference {
                    impact_time_ms: p
                        .spec
                        .trigger_us
                        .map(|tr| (t.t_impact_us - tr) as f64 / 1000.0),
                    u_mm: Some(t.u_mm),
                    v_mm: Some(t.v_mm),
                    speed_mps: Some(t.speed_mps),
                }),
                seed: p.spec.seed,
            })
        })
        .collect::<Result<_>>()?;

    let manifest = Manifest {
        trials: entries,
        base_dir: out.to_path_buf(),
    };
    let manifest_path = out.join("manifest.toml");
    let config_path = out.join("config.toml");
    std::fs::write(&manifest_path, manifest.to_toml_string()?)
        .map_err(|e| Error::io(&manifest_path, e))?;
    std::fs::write(&config_path, cfg.to_toml_string()?).map_err(|e| Error::io(&config_path, e))?;
    Ok(SynthOutput {
        manifest_path,
        config_path,
        trials: manifest.trials.len(),
        thresholds: (m, v),
    })
}

/// Ground truth as written next to the streams; the bulky per-packet
/// centroids and racket mask are left out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    pub trial: String,
    pub participant: String,
    pub failure: Option<crate::synth::FailureMode>,
    pub t_impact_us: i64,
    pub trigger_us: Option<i64>,
    pub u_mm: f64,
    pub v_mm: f64,
    pub speed_mps: f64,
    pub total_speed_mps: f64,
    pub rear_tip_px: [f64; 2],
}

impl TruthFile {
    fn new(p: &crate::synth::PlannedTrial, t: &crate::synth::GroundTruth) -> Self {
        Self {
            trial: p.id.clone(),
            participant: p.participant.clone(),
            failure: p.failure,
            t_impact_us: t.t_impact_us,
            trigger_us: p.spec.trigger_us,
            u_mm: t.u_mm,
            v_mm: t.v_mm,
            speed_mps: t.speed_mps,
            total_speed_mps: t.total_speed_mps,
            rear_tip_px: t.rear_tip_px,
        }
    }
}
