//! Sampling batches of trials with known outcomes.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::scene::SceneSpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureMode {
    /// Shuttle lands on the frame, outside the inner ellipse.
    TipOutsideFace,
    /// Racket tilted far past the allowed shaft angle.
    ShaftAngleInvalid,
}

impl FailureMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::TipOutsideFace => "tip_outside_face",
            Self::ShaftAngleInvalid => "shaft_angle_invalid",
        }
    }
}

impl FromStr for FailureMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "tipoutsideface" => Ok(Self::TipOutsideFace),
            "shaftangleinvalid" => Ok(Self::ShaftAngleInvalid),
            _ => Err(Error::Invalid(format!("unknown failure mode '{s}'"))),
        }
    }
}

/// `mode:fraction`, e.g. `tip_outside_face:0.05`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FailureShare {
    pub mode: FailureMode,
    pub fraction: f64,
}

impl FromStr for FailureShare {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (mode, frac) = s
            .split_once(':')
            .ok_or_else(|| Error::Invalid(format!("expected mode:fraction, got '{s}'")))?;
        let fraction: f64 = frac
            .trim()
            .parse()
            .map_err(|_| Error::Invalid(format!("bad fraction in '{s}'")))?;
        if !(0.0..=1.0).contains(&fraction) {
            return Err(Error::Invalid(format!("fraction out of [0, 1] in '{s}'")));
        }
        Ok(Self {
            mode: mode.trim().parse()?,
            fraction,
        })
    }
}

/// Perturbs `spec` so that `mode` is the correct outcome.
pub fn apply_failure(spec: &mut SceneSpec, mode: FailureMode, rng: &mut impl Rng) {
    match mode {
        FailureMode::TipOutsideFace => {
            let r = &mut spec.rear;
            // tip on the centre line of the top rim
            let v = r.face_inner_long_mm / 2.0 + r.rim_width_mm / 2.0;
            r.impact_uv_mm = [rng.random_range(-10.0..10.0), v];
        }
        FailureMode::ShaftAngleInvalid => {
            spec.rear.tilt_deg = if rng.random_bool(0.5) { 70.0 } else { -70.0 };
        }
    }
}

/// Perturbs `spec` for the failure mode using its own seed.
pub fn generate_failure_spec(spec: &SceneSpec, mode: FailureMode) -> SceneSpec {
    let mut out = spec.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0xfa11);
    apply_failure(&mut out, mode, &mut rng);
    out
}

/// Ranges sampled per trial around a base scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthPlan {
    pub seed: u64,
    pub trials: usize,
    pub participants: usize,
    pub speed_mps: [f64; 2],
    pub outbound_angle_deg: [f64; 2],
    pub tilt_deg: [f64; 2],
    /// Largest normalized face radius of sampled impact points.
    pub max_face_radius: f64,
    pub lateral_impact_x: [f64; 2],
    pub lateral_impact_y: [f64; 2],
    /// Spacing of trial time origins, µs.
    pub trial_spacing_us: i64,
    /// Write a trigger mark this long before impact, ms.
    pub trigger_lead_ms: Option<f64>,
    /// Half-width of the uniform spread added to the trigger lead, ms.
    pub trigger_jitter_ms: f64,
    pub failures: Vec<FailureShare>,
    pub base: SceneSpec,
}

impl Default for SynthPlan {
    fn default() -> Self {
        Self {
            seed: 1,
            trials: 20,
            participants: 4,
            speed_mps: [40.0, 60.0],
            outbound_angle_deg: [5.0, 15.0],
            tilt_deg: [-15.0, 15.0],
            max_face_radius: 0.75,
            lateral_impact_x: [440.0, 500.0],
            lateral_impact_y: [280.0, 320.0],
            trial_spacing_us: 1_000_000,
            trigger_lead_ms: Some(150.0),
            trigger_jitter_ms: 5.0,
            failures: Vec::new(),
            base: SceneSpec::default(),
        }
    }
}

/// One sampled trial of a plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedTrial {
    pub id: String,
    pub participant: String,
    pub failure: Option<FailureMode>,
    pub spec: SceneSpec,
}

fn sample(rng: &mut ChaCha8Rng, range: [f64; 2]) -> f64 {
    if range[1] > range[0] {
        rng.random_range(range[0]..range[1])
    } else {
        range[0]
    }
}

impl SynthPlan {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let plan: Self =
            toml::from_str(text).map_err(|e| Error::Config(format!("synth plan: {e}")))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let total: f64 = self.failures.iter().map(|f| f.fraction).sum();
        if self.participants == 0
            || total > 1.0
            || !(self.trigger_jitter_ms >= 0.0)
            || !(0.0..1.0).contains(&self.max_face_radius)
        {
            return Err(Error::Invalid(
                "synth plan has invalid participants, failures or radius".into(),
            ));
        }
        self.base.validate()
    }

    /// Samples every trial. Failure counts are `round(fraction · trials)`
    /// per mode, assigned to shuffled trial slots.
    pub fn trials(&self) -> Result<Vec<PlannedTrial>> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut modes: Vec<Option<FailureMode>> = Vec::with_capacity(self.trials);
        for f in &self.failures {
            let n = (f.fraction * self.trials as f64).round() as usize;
            modes.extend(std::iter::repeat_n(Some(f.mode), n));
        }
        if modes.len() > self.trials {
            return Err(Error::Invalid(
                "failure fractions exceed the trial count".into(),
            ));
        }
        modes.resize(self.trials, None);
        // Fisher-Yates with the plan RNG
        for i in (1..modes.len()).rev() {
            let j = rng.random_range(0..=i);
            modes.swap(i, j);
        }

        let b = &self.base;
        let (half_ml, half_long) = (
            b.rear.face_inner_ml_mm / 2.0,
            b.rear.face_inner_long_mm / 2.0,
        );
        let mut out = Vec::with_capacity(self.trials);
        for (i, failure) in modes.into_iter().enumerate() {
            let mut spec = b.clone();
            spec.seed = rng.random();
            let jitter: i64 = rng.random_range(0..crate::events::PACKET_US);
            spec.t_impact_us = b.t_impact_us + i as i64 * self.trial_spacing_us + jitter;
            spec.trigger_us = self
                .trigger_lead_ms
                .map(|ms| spec.t_impact_us - (ms * 1000.0) as i64);
            spec.lateral.outbound_speed_mps = sample(&mut rng, self.speed_mps);
            spec.lateral.outbound_angle_deg = sample(&mut rng, self.outbound_angle_deg);
            spec.lateral.impact_px = [
                sample(&mut rng, self.lateral_impact_x),
                sample(&mut rng, self.lateral_impact_y),
            ];
            spec.rear.tilt_deg = sample(&mut rng, self.tilt_deg);
            // uniform over the scaled ellipse
            let (u, v) = loop {
                let (x, y): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                if x * x + y * y < 1.0 {
                    break (
                        x * self.max_face_radius * half_ml,
                        y * self.max_face_radius * half_long,
                    );
                }
            };
            spec.rear.impact_uv_mm = [u, v];
            if let Some(mode) = failure {
                apply_failure(&mut spec, mode, &mut rng);
            }
            let jitter_ms = sample(&mut rng, [-self.trigger_jitter_ms, self.trigger_jitter_ms]);
            spec.trigger_us = spec
                .trigger_us
                .map(|t| t - (jitter_ms * 1000.0).round() as i64);
            out.push(PlannedTrial {
                id: format!("trial_{:04}", i + 1),
                participant: format!("P{}", i % self.participants + 1),
                failure,
                spec,
            });
        }
        Ok(out)
    }
}
