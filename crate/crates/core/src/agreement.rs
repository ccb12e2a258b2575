//! Bland–Altman agreement between the event-camera estimates (EV) and a
//! reference measurement (HS).
//!
//! Differences are always EV − HS. Limits of agreement use the sample SD.
//! Confidence intervals account for repeated trials within a participant
//! using Zou's variance-component construction, and fall back to the
//! independent-observation formulas when the between-participant component
//! cannot be estimated.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};

/// Multiplier for the limits of agreement.
pub const LOA_Z: f64 = 1.96;

/// Relative tolerance below which a spread is treated as exactly zero.
const ZERO_SPREAD: f64 = 1e-10;

/// One row of the pairs CSV. A missing value means the trial failed for
/// that metric on one side and is excluded from that metric only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub participant: String,
    pub trial: String,
    pub metric: String,
    pub ev: Option<f64>,
    pub hs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pair {
    pub participant: String,
    pub ev: f64,
    pub hs: f64,
}

/// Complete EV/HS pairs for a single metric.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairedMeasurements {
    pub pairs: Vec<Pair>,
}

impl PairedMeasurements {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, participant: impl Into<String>, ev: f64, hs: f64) {
        self.pairs.push(Pair {
            participant: participant.into(),
            ev,
            hs,
        });
    }

    /// Collects the complete, finite pairs for `metric`.
    pub fn from_records(records: &[PairRecord], metric: &str) -> Self {
        let mut out = Self::new();
        for r in records.iter().filter(|r| r.metric == metric) {
            if let (Some(ev), Some(hs)) = (r.ev, r.hs) {
                if ev.is_finite() && hs.is_finite() {
                    out.push(r.participant.clone(), ev, hs);
                }
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn differences(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.ev - p.hs).collect()
    }

    pub fn means(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| 0.5 * (p.ev + p.hs)).collect()
    }

    /// Differences grouped by participant, in participant-id order.
    pub fn groups(&self) -> Vec<Vec<f64>> {
        let mut by: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for p in &self.pairs {
            by.entry(&p.participant).or_default().push(p.ev - p.hs);
        }
        by.into_values().collect()
    }

    pub fn participants(&self) -> usize {
        self.groups().len()
    }

    pub fn swapped(&self) -> Self {
        Self {
            pairs: self
                .pairs
                .iter()
                .map(|p| Pair {
                    participant: p.participant.clone(),
                    ev: p.hs,
                    hs: p.ev,
                })
                .collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            pairs: self
                .pairs
                .iter()
                .map(|p| Pair {
                    participant: p.participant.clone(),
                    ev: p.ev * c,
                    hs: p.hs * c,
                })
                .collect(),
        }
    }

    fn scale(&self) -> f64 {
        self.pairs
            .iter()
            .map(|p| p.ev.abs().max(p.hs.abs()))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlandAltman {
    pub n: usize,
    pub bias: f64,
    pub sd: f64,
    pub loa: [f64; 2],
}

pub fn bland_altman(pairs: &PairedMeasurements) -> Result<BlandAltman> {
    let n = pairs.len();
    if n < 3 {
        return Err(Error::Invalid(format!(
            "Bland-Altman analysis needs at least 3 pairs, got {n}"
        )));
    }
    let d = pairs.differences();
    let bias = mean(&d);
    let sd = sample_sd(&d, bias);
    Ok(BlandAltman {
        n,
        bias,
        sd,
        loa: [bias - LOA_Z * sd, bias + LOA_Z * sd],
    })
}

/// One-way random-effects decomposition of the differences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceComponents {
    pub participants: usize,
    pub n: usize,
    pub ms_between: f64,
    pub ms_within: f64,
    /// Effective replicates per participant for unbalanced designs.
    pub m0: f64,
    pub between: f64,
    pub within: f64,
}

impl VarianceComponents {
    pub fn total(&self) -> f64 {
        self.between + self.within
    }
}

/// `None` when fewer than two participants or no participant has a
/// replicate, since one of the mean squares then has no degrees of freedom.
pub fn variance_components(groups: &[Vec<f64>]) -> Option<VarianceComponents> {
    let groups: Vec<&Vec<f64>> = groups.iter().filter(|g| !g.is_empty()).collect();
    let k = groups.len();
    let n: usize = groups.iter().map(|g| g.len()).sum();
    if k < 2 || n <= k {
        return None;
    }
    let grand = groups.iter().flat_map(|g| g.iter()).sum::<f64>() / n as f64;
    let mut ssb = 0.0;
    let mut ssw = 0.0;
    let mut sum_m2 = 0.0;
    for g in &groups {
        let m = g.len() as f64;
        let gm = mean(g);
        ssb += m * (gm - grand).powi(2);
        ssw += g.iter().map(|x| (x - gm).powi(2)).sum::<f64>();
        sum_m2 += m * m;
    }
    let ms_between = ssb / (k - 1) as f64;
    let ms_within = ssw / (n - k) as f64;
    let m0 = (n as f64 - sum_m2 / n as f64) / (k - 1) as f64;
    Some(VarianceComponents {
        participants: k,
        n,
        ms_between,
        ms_within,
        m0,
        between: ((ms_between - ms_within) / m0).max(0.0),
        within: ms_within,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZouIntervals {
    pub ci_bias: [f64; 2],
    pub ci_loa_low: [f64; 2],
    pub ci_loa_high: [f64; 2],
    /// Interval for the total SD of a single difference.
    pub ci_sd: [f64; 2],
    /// Point estimate of the total SD used to centre the LoA intervals.
    pub sd_total: f64,
    /// False when the independent-observation formulas were used.
    pub repeated_measures: bool,
    pub components: Option<VarianceComponents>,
}

/// Confidence intervals for the bias and both limits of agreement.
pub fn zou_ci(pairs: &PairedMeasurements, level: f64) -> Result<ZouIntervals> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Invalid(format!(
            "confidence level {level} not in (0, 1)"
        )));
    }
    let d = pairs.differences();
    if d.len() < 3 {
        return Err(Error::Invalid(format!(
            "confidence intervals need at least 3 pairs, got {}",
            d.len()
        )));
    }
    let alpha = 1.0 - level;
    let mu = mean(&d);

    let comps = variance_components(&pairs.groups());
    let Some(vc) = comps.filter(|vc| vc.between > 0.0) else {
        let mut out = independent_ci(&d, level)?;
        out.components = comps;
        return Ok(out);
    };

    let k = vc.participants as f64;
    let n = vc.n as f64;
    let sum_m2: f64 = pairs
        .groups()
        .iter()
        .map(|g| (g.len() as f64).powi(2))
        .sum();
    let var_mu = vc.between * sum_m2 / (n * n) + vc.within / n;
    let t = t_quantile(1.0 - alpha / 2.0, k - 1.0)?;
    let half = t * var_mu.sqrt();
    let ci_mu = [mu - half, mu + half];

    let [lb, ub] = ms_interval(vc.ms_between, k - 1.0, alpha)?;
    let [lw, uw] = ms_interval(vc.ms_within, n - k, alpha)?;
    let cb = 1.0 / vc.m0;
    let cw = 1.0 - 1.0 / vc.m0;
    let var_total = cb * vc.ms_between + cw * vc.ms_within;
    let lo_var = var_total
        - ((cb * (vc.ms_between - lb)).powi(2) + (cw * (vc.ms_within - lw)).powi(2)).sqrt();
    let hi_var = var_total
        + ((cb * (ub - vc.ms_between)).powi(2) + (cw * (uw - vc.ms_within)).powi(2)).sqrt();
    let sd = var_total.sqrt();
    let ci_sd = [lo_var.max(0.0).sqrt(), hi_var.sqrt()];

    let zh = z_quantile(1.0 - alpha / 2.0) * var_mu.sqrt();
    let (ci_loa_low, ci_loa_high) = mover_loa(mu, [mu - zh, mu + zh], sd, ci_sd);
    Ok(ZouIntervals {
        ci_bias: ci_mu,
        ci_loa_low,
        ci_loa_high,
        ci_sd,
        sd_total: sd,
        repeated_measures: true,
        components: Some(vc),
    })
}

/// Intervals that treat every difference as an independent observation.
pub fn independent_ci(d: &[f64], level: f64) -> Result<ZouIntervals> {
    let n = d.len();
    if n < 2 {
        return Err(Error::Invalid("need at least 2 differences".into()));
    }
    let alpha = 1.0 - level;
    let mu = mean(d);
    let sd = sample_sd(d, mu);
    let df = (n - 1) as f64;
    let half = t_quantile(1.0 - alpha / 2.0, df)? * sd / (n as f64).sqrt();
    let ci_mu = [mu - half, mu + half];
    let [lv, uv] = ms_interval(sd * sd, df, alpha)?;
    let ci_sd = [lv.sqrt(), uv.sqrt()];
    let (ci_loa_low, ci_loa_high) = mover_loa(mu, ci_mu, sd, ci_sd);
    Ok(ZouIntervals {
        ci_bias: ci_mu,
        ci_loa_low,
        ci_loa_high,
        ci_sd,
        sd_total: sd,
        repeated_measures: false,
        components: None,
    })
}

/// Combines the mean and SD intervals into intervals for mu ∓ z·sd.
fn mover_loa(mu: f64, ci_mu: [f64; 2], sd: f64, ci_sd: [f64; 2]) -> ([f64; 2], [f64; 2]) {
    let dm_lo = mu - ci_mu[0];
    let dm_hi = ci_mu[1] - mu;
    let ds_lo = LOA_Z * (sd - ci_sd[0]);
    let ds_hi = LOA_Z * (ci_sd[1] - sd);

    let upper = mu + LOA_Z * sd;
    let ci_upper = [upper - dm_lo.hypot(ds_lo), upper + dm_hi.hypot(ds_hi)];
    let lower = mu - LOA_Z * sd;
    let ci_lower = [lower - dm_lo.hypot(ds_hi), lower + dm_hi.hypot(ds_lo)];
    (ci_lower, ci_upper)
}

/// Chi-square interval for a mean square with `df` degrees of freedom.
fn ms_interval(ms: f64, df: f64, alpha: f64) -> Result<[f64; 2]> {
    let chi =
        ChiSquared::new(df).map_err(|e| Error::Invalid(format!("chi-square df {df}: {e}")))?;
    let hi_q = chi.inverse_cdf(1.0 - alpha / 2.0);
    let lo_q = chi.inverse_cdf(alpha / 2.0);
    Ok([df * ms / hi_q, df * ms / lo_q])
}

fn z_quantile(p: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("unit normal").inverse_cdf(p)
}

fn t_quantile(p: f64, df: f64) -> Result<f64> {
    let t = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| Error::Invalid(format!("t distribution df {df}: {e}")))?;
    Ok(t.inverse_cdf(p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    /// `None` when the correlation is undefined.
    pub r: Option<f64>,
    pub p: Option<f64>,
}

/// Pearson correlation between per-trial means and differences.
///
/// Constant differences cannot scale with magnitude, so they give r = 0 and
/// p = 1. Constant means with varying differences leave r undefined.
pub fn proportional_bias(pairs: &PairedMeasurements) -> Result<Correlation> {
    let n = pairs.len();
    if n < 3 {
        return Err(Error::Invalid(format!(
            "correlation needs at least 3 pairs, got {n}"
        )));
    }
    let x = pairs.means();
    let y = pairs.differences();
    let (mx, my) = (mean(&x), mean(&y));
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let tiny = (ZERO_SPREAD * pairs.scale().max(f64::MIN_POSITIVE)).powi(2) * n as f64;
    if syy <= tiny {
        return Ok(Correlation {
            r: Some(0.0),
            p: Some(1.0),
        });
    }
    if sxx <= tiny {
        return Ok(Correlation { r: None, p: None });
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    Ok(Correlation {
        r: Some(r),
        p: Some(pearson_p(r, n)),
    })
}

/// Two-sided p-value for a Pearson correlation on n − 2 degrees of freedom.
pub fn pearson_p(r: f64, n: usize) -> f64 {
    if n < 3 {
        return f64::NAN;
    }
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let df = (n - 2) as f64;
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df is positive");
    (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementResult {
    pub bias: f64,
    pub ci_bias: [f64; 2],
    pub loa: [f64; 2],
    pub ci_loa_low: [f64; 2],
    pub ci_loa_high: [f64; 2],
    pub n: usize,
    pub r: Option<f64>,
    pub p: Option<f64>,
    pub sd: f64,
    pub participants: usize,
    pub repeated_measures: bool,
    pub sd_total: f64,
    pub variance_components: Option<VarianceComponents>,
}

pub fn analyze(pairs: &PairedMeasurements, level: f64) -> Result<AgreementResult> {
    let ba = bland_altman(pairs)?;
    let ci = zou_ci(pairs, level)?;
    let corr = proportional_bias(pairs)?;
    Ok(AgreementResult {
        bias: ba.bias,
        ci_bias: ci.ci_bias,
        loa: ba.loa,
        ci_loa_low: ci.ci_loa_low,
        ci_loa_high: ci.ci_loa_high,
        n: ba.n,
        r: corr.r,
        p: corr.p,
        sd: ba.sd,
        participants: pairs.participants(),
        repeated_measures: ci.repeated_measures,
        sd_total: ci.sd_total,
        variance_components: ci.components,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub metrics: BTreeMap<String, AgreementResult>,
    /// Metrics that could not be analysed, with the reason.
    pub skipped: BTreeMap<String, String>,
}

/// Runs the analysis for every metric present in `records`.
pub fn analyze_records(records: &[PairRecord], level: f64) -> AgreementReport {
    let mut report = AgreementReport::default();
    let metrics: std::collections::BTreeSet<&str> =
        records.iter().map(|r| r.metric.as_str()).collect();
    for metric in metrics {
        let pairs = PairedMeasurements::from_records(records, metric);
        match analyze(&pairs, level) {
            Ok(res) => {
                report.metrics.insert(metric.to_string(), res);
            }
            Err(e) => {
                report.skipped.insert(metric.to_string(), e.to_string());
            }
        }
    }
    report
}

pub fn parse_pairs_csv<R: Read>(reader: R) -> Result<Vec<PairRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<PairRecord>().enumerate() {
        let rec = row.map_err(|e| Error::Parse {
            location: format!("pairs row {}", i + 2),
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn read_pairs_csv(path: &Path) -> Result<Vec<PairRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_pairs_csv(file).map_err(|e| match e {
        Error::Parse { location, message } => Error::Parse {
            location: format!("{}: {location}", path.display()),
            message,
        },
        other => other,
    })
}

pub fn write_pairs_csv(path: &Path, records: &[PairRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for r in records {
        wtr.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))
}

/// Writes `agreement.json` plus, per metric, `agreement_<metric>.json`,
/// `plot_<metric>.csv` (mean,diff rows) and `plot_<metric>_lines.csv`.
pub fn write_report(dir: &Path, report: &AgreementReport, records: &[PairRecord]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_json(&dir.join("agreement.json"), report)?;
    for (metric, res) in &report.metrics {
        let stem = file_stem(metric);
        write_json(&dir.join(format!("agreement_{stem}.json")), res)?;

        let pairs = PairedMeasurements::from_records(records, metric);
        let path = dir.join(format!("plot_{stem}.csv"));
        let mut wtr = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
        wtr.write_record(["mean", "diff"])
            .map_err(|e| csv_error(&path, e))?;
        for (m, d) in pairs.means().iter().zip(pairs.differences()) {
            wtr.write_record([m.to_string(), d.to_string()])
                .map_err(|e| csv_error(&path, e))?;
        }
        wtr.flush().map_err(|e| Error::io(&path, e))?;

        let path = dir.join(format!("plot_{stem}_lines.csv"));
        let mut wtr = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
        wtr.write_record(["line", "value"])
            .map_err(|e| csv_error(&path, e))?;
        for (name, v) in [
            ("bias", res.bias),
            ("loa_low", res.loa[0]),
            ("loa_high", res.loa[1]),
        ] {
            wtr.write_record([name.to_string(), v.to_string()])
                .map_err(|e| csv_error(&path, e))?;
        }
        wtr.flush().map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::Parse {
        location: path.display().to_string(),
        message: e.to_string(),
    }
}

fn file_stem(metric: &str) -> String {
    metric
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sample_sd(v: &[f64], m: f64) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn from_diffs(groups: &[&[f64]]) -> PairedMeasurements {
        let mut p = PairedMeasurements::new();
        for (i, g) in groups.iter().enumerate() {
            for (j, d) in g.iter().enumerate() {
                let hs = 10.0 + j as f64;
                p.push(format!("P{i}"), hs + d, hs);
            }
        }
        p
    }

    #[test]
    fn identical_vectors() {
        let mut p = PairedMeasurements::new();
        for v in [1.0, 2.5, -3.0, 4.0] {
            p.push("a", v, v);
        }
        let ba = bland_altman(&p).unwrap();
        assert_eq!(ba.bias, 0.0);
        assert_eq!(ba.loa, [0.0, 0.0]);
    }

    #[test]
    fn too_few_pairs() {
        let p = from_diffs(&[&[1.0, 2.0]]);
        assert!(bland_altman(&p).is_err());
        assert!(proportional_bias(&p).is_err());
    }

    #[test]
    fn constant_offset_gives_zero_r() {
        let mut p = PairedMeasurements::new();
        for hs in [50.0, 51.3, 52.9, 55.0, 49.2] {
            p.push("a", hs + 1.84, hs);
        }
        let c = proportional_bias(&p).unwrap();
        assert_eq!(c.r, Some(0.0));
    }

    #[test]
    fn constant_means_undefined_r() {
        let mut p = PairedMeasurements::new();
        for d in [1.0, -1.0, 2.0, 0.5] {
            p.push("a", 5.0 + d / 2.0, 5.0 - d / 2.0);
        }
        assert_eq!(proportional_bias(&p).unwrap().r, None);
    }

    #[test]
    fn pearson_p_fixed_points() {
        assert_abs_diff_eq!(pearson_p(0.013, 124), 0.88, epsilon = 0.01);
        assert_abs_diff_eq!(pearson_p(0.045, 116), 0.63, epsilon = 0.01);
        assert_eq!(pearson_p(0.0, 10), 1.0);
    }

    #[test]
    fn components_unbalanced() {
        let g = vec![vec![1.0, 1.0], vec![3.0, 2.0, 3.0]];
        let vc = variance_components(&g).unwrap();
        let grand = 10.0 / 5.0;
        let ssb = 2.0 * (1.0f64 - grand).powi(2) + 3.0 * (8.0f64 / 3.0 - grand).powi(2);
        let ssw = 0.0 + (1.0f64 / 3.0).powi(2) * 2.0 + (2.0f64 / 3.0).powi(2);
        assert_abs_diff_eq!(vc.ms_between, ssb, epsilon = 1e-12);
        assert_abs_diff_eq!(vc.ms_within, ssw / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vc.m0, 5.0 - 13.0 / 5.0, epsilon = 1e-12);
    }

    #[test]
    fn single_participant_falls_back() {
        let p = from_diffs(&[&[1.0, 2.0, 0.5, 1.5]]);
        let ci = zou_ci(&p, 0.95).unwrap();
        assert!(!ci.repeated_measures);
        assert!(ci.components.is_none());
    }

    #[test]
    fn identical_differences_degenerate() {
        let p = from_diffs(&[&[0.75; 4], &[0.75; 3], &[0.75; 5]]);
        let ci = zou_ci(&p, 0.95).unwrap();
        for iv in [ci.ci_bias, ci.ci_loa_low, ci.ci_loa_high] {
            assert_abs_diff_eq!(iv[0], 0.75, epsilon = 1e-12);
            assert_abs_diff_eq!(iv[1], 0.75, epsilon = 1e-12);
        }
    }

    #[test]
    fn repeated_path_used_with_participant_offsets() {
        let p = from_diffs(&[&[0.0, 0.2, -0.1], &[5.0, 5.1, 4.8], &[-3.0, -2.9, -3.2]]);
        let ci = zou_ci(&p, 0.95).unwrap();
        assert!(ci.repeated_measures);
        let ind = independent_ci(&p.differences(), 0.95).unwrap();
        assert!(ci.ci_bias[1] - ci.ci_bias[0] > ind.ci_bias[1] - ind.ci_bias[0]);
    }

    #[test]
    fn csv_round_trip_with_missing() {
        let text = "participant,trial,metric,ev,hs\nP1,t1,speed_mps,51.2,52.0\nP1,t2,location_x_mm,,-20.5\n";
        let recs = parse_pairs_csv(text.as_bytes()).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[1].ev, None);
        assert!(PairedMeasurements::from_records(&recs, "location_x_mm").is_empty());

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pairs.csv");
        write_pairs_csv(&path, &recs).unwrap();
        assert_eq!(read_pairs_csv(&path).unwrap(), recs);
    }

    #[test]
    fn csv_bad_value_reports_row() {
        let text = "participant,trial,metric,ev,hs\nP1,t1,m,abc,1\n";
        let err = parse_pairs_csv(text.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("row 2"), "{err}");
    }
}
