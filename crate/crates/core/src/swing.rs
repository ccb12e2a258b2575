//! Swing interval detection from event-rate statistics.
//!
//! Rates are per-packet event counts. Statistics use a trailing window of
//! consecutive packets, so detection can run online.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{EventPacket, PACKET_US};

/// Length of a detected swing interval.
pub const SWING_US: i64 = 100_000;

/// Dense per-packet event counts.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSeries {
    pub t_start: i64,
    pub counts: Vec<u32>,
}

impl RateSeries {
    pub fn from_packets(packets: &[EventPacket<'_>]) -> Self {
        Self {
            t_start: packets.first().map_or(0, |p| p.t_start),
            counts: packets.iter().map(|p| p.count() as u32).collect(),
        }
    }

    pub fn time_of(&self, index: usize) -> i64 {
        self.t_start + index as i64 * PACKET_US
    }

    /// Sub-series covering `[t0, t1)`, clipped to the available range.
    pub fn slice_time(&self, t0: i64, t1: i64) -> RateSeries {
        let idx = |t: i64| -> usize {
            let k = (t - self.t_start).div_euclid(PACKET_US);
            k.clamp(0, self.counts.len() as i64) as usize
        };
        let (a, b) = (idx(t0), idx(t1 + PACKET_US - 1));
        RateSeries {
            t_start: self.time_of(a),
            counts: self.counts[a..b.max(a)].to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowStats {
    pub mean: f64,
    pub variance: f64,
}

/// Mean and population variance of the trailing window ending at each
/// index; `None` where the window is incomplete.
pub fn sliding_stats(
    rates: &RateSeries,
    window_packets: usize,
) -> Result<Vec<Option<WindowStats>>> {
    if window_packets < 2 {
        return Err(Error::Invalid(format!(
            "window must span at least 2 packets, got {window_packets}"
        )));
    }
    let w = window_packets as u128;
    let mut out = Vec::with_capacity(rates.counts.len());
    let (mut sum, mut sum_sq) = (0u128, 0u128);
    for (i, &c) in rates.counts.iter().enumerate() {
        sum += c as u128;
        sum_sq += (c as u128) * (c as u128);
        if i >= window_packets {
            let old = rates.counts[i - window_packets] as u128;
            sum -= old;
            sum_sq -= old * old;
        }
        if i + 1 >= window_packets {
            // exact integer numerator: w·Σx² − (Σx)²
            let num = w * sum_sq - sum * sum;
            out.push(Some(WindowStats {
                mean: sum as f64 / w as f64,
                variance: num as f64 / (w * w) as f64,
            }));
        } else {
            out.push(None);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub window_packets: usize,
    pub mean_threshold: f64,
    pub var_threshold: f64,
    pub refractory_us: i64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            window_packets: (SWING_US / PACKET_US) as usize,
            mean_threshold: 0.0,
            var_threshold: 0.0,
            refractory_us: 300_000,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_packets < 2 {
            return Err(Error::Invalid(
                "swing window must span at least 2 packets".into(),
            ));
        }
        if !(self.mean_threshold >= 0.0 && self.var_threshold >= 0.0) {
            return Err(Error::Invalid(
                "swing thresholds must be non-negative".into(),
            ));
        }
        if self.refractory_us < 0 {
            return Err(Error::Invalid(
                "refractory period must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwingInterval {
    pub onset_t: i64,
    pub end_t: i64,
}

impl SwingInterval {
    pub fn starting_at(onset_t: i64) -> Self {
        Self {
            onset_t,
            end_t: onset_t + SWING_US,
        }
    }

    pub fn contains(&self, t: i64) -> bool {
        self.onset_t <= t && t <= self.end_t
    }
}

/// Onsets are packets where both statistics strictly exceed their
/// thresholds, at least one refractory period after the previous onset.
pub fn detect_swing(rates: &RateSeries, cfg: &DetectorConfig) -> Result<Vec<SwingInterval>> {
    cfg.validate()?;
    let stats = sliding_stats(rates, cfg.window_packets)?;
    let mut out: Vec<SwingInterval> = Vec::new();
    for (i, s) in stats.iter().enumerate() {
        let Some(s) = s else { continue };
        if s.mean > cfg.mean_threshold && s.variance > cfg.var_threshold {
            let t = rates.time_of(i);
            if out
                .last()
                .is_none_or(|prev| t >= prev.onset_t + cfg.refractory_us)
            {
                out.push(SwingInterval::starting_at(t));
            }
        }
    }
    Ok(out)
}

/// Thresholds at `mean + k·sd` of each statistic over the complete windows
/// of a swing-free segment.
pub fn calibrate_thresholds(
    quiescent: &RateSeries,
    window_packets: usize,
    k_mean: f64,
    k_var: f64,
) -> Result<(f64, f64)> {
    if quiescent.counts.len() < window_packets {
        return Err(Error::Invalid(format!(
            "quiescent segment has {} packets, shorter than one {window_packets}-packet window",
            quiescent.counts.len()
        )));
    }
    let stats: Vec<WindowStats> = sliding_stats(quiescent, window_packets)?
        .into_iter()
        .flatten()
        .collect();
    let summarize = |f: fn(&WindowStats) -> f64| {
        let n = stats.len() as f64;
        let mu = stats.iter().map(f).sum::<f64>() / n;
        let var = stats.iter().map(|s| (f(s) - mu).powi(2)).sum::<f64>() / n;
        (mu, var.sqrt())
    };
    let (mu_m, sd_m) = summarize(|s| s.mean);
    let (mu_v, sd_v) = summarize(|s| s.variance);
    Ok((
        (mu_m + k_mean * sd_m).max(0.0),
        (mu_v + k_var * sd_v).max(0.0),
    ))
}
