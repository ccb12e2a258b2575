use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use smashcam::agreement::{analyze_records, read_pairs_csv, write_report};
use smashcam::io::read_stream;
use smashcam::pipeline::{
    calibrate_from_stream, run_batch, write_batch, write_synth, Manifest, PipelineConfig,
    SwingSection,
};
use smashcam::synth::{FailureShare, SynthPlan};

#[derive(Parser)]
#[command(
    name = "smashcam",
    version,
    about = "Event-camera analysis of badminton smash impacts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyse every trial of a manifest.
    Analyze {
        #[arg(long)]
        manifest: PathBuf,
        /// Analysis settings (TOML); defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a synthetic batch with ground truth, manifest and config.
    Synth {
        /// Synthetic batch plan (TOML); defaults apply when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Constructed failures as mode:fraction, e.g. tip_outside_face:0.05.
        /// Replaces the plan's failure list.
        #[arg(long, num_args = 1..)]
        failures: Vec<FailureShare>,
    },
    /// Bland-Altman agreement from a participant,trial,metric,ev,hs CSV.
    Agree {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
    },
    /// Swing thresholds from a swing-free segment of a stream.
    CalibrateThresholds {
        #[arg(long)]
        stream: PathBuf,
        /// Segment as t0:t1 in stream microseconds.
        #[arg(long, value_parser = parse_span)]
        quiescent: (i64, i64),
        #[arg(long, default_value_t = 6.0)]
        k_mean: f64,
        #[arg(long, default_value_t = 6.0)]
        k_var: f64,
        #[arg(long, default_value_t = 100.0)]
        window_ms: f64,
    },
}

fn parse_span(s: &str) -> Result<(i64, i64), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected t0:t1, got '{s}'"))?;
    let t0 = a.trim().parse().map_err(|_| format!("bad t0 in '{s}'"))?;
    let t1 = b.trim().parse().map_err(|_| format!("bad t1 in '{s}'"))?;
    if t1 <= t0 {
        return Err(format!("t1 must exceed t0 in '{s}'"));
    }
    Ok((t0, t1))
}

fn fmt_rate(t: &smashcam::pipeline::Tally) -> String {
    match t.rate() {
        Some(r) => format!("{}/{} ({:.1}%)", t.succeeded, t.total, 100.0 * r),
        None => "0/0".into(),
    }
}

fn analyze(manifest: PathBuf, config: Option<PathBuf>, out: PathBuf) -> Result<ExitCode> {
    let manifest = Manifest::load(&manifest).context("reading manifest")?;
    let cfg = match config {
        Some(p) => PipelineConfig::load(&p).context("reading config")?,
        None => PipelineConfig::default(),
    };
    let res = run_batch(&manifest, &cfg)?;
    write_batch(&out, &res).context("writing reports")?;

    let s = &res.summary;
    println!("trials {}  analyzed {}", s.trials, s.analyzed);
    println!(
        "overall  time {}  location {}  speed {}",
        fmt_rate(&s.overall.time),
        fmt_rate(&s.overall.location),
        fmt_rate(&s.overall.speed)
    );
    for (p, t) in &s.per_participant {
        println!(
            "{p}  time {}  location {}  speed {}",
            fmt_rate(&t.time),
            fmt_rate(&t.location),
            fmt_rate(&t.speed)
        );
    }
    for (id, e) in &s.errors {
        eprintln!("{id}: {e}");
    }
    if let Some(a) = &res.agreement {
        print_agreement(a);
    }
    println!("reports written to {}", out.display());
    if res.analyzed() == 0 {
        eprintln!("no trial could be analysed");
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

fn print_agreement(a: &smashcam::agreement::AgreementReport) {
    for (metric, r) in &a.metrics {
        println!(
            "{metric}: n {} bias {:.3} [{:.3}, {:.3}] LoA {:.3} to {:.3} r {} p {}",
            r.n,
            r.bias,
            r.ci_bias[0],
            r.ci_bias[1],
            r.loa[0],
            r.loa[1],
            r.r.map_or("undefined".into(), |v| format!("{v:.3}")),
            r.p.map_or("undefined".into(), |v| format!("{v:.3}")),
        );
    }
    for (metric, why) in &a.skipped {
        println!("{metric}: skipped ({why})");
    }
}

fn synth(spec: Option<PathBuf>, out: PathBuf, failures: Vec<FailureShare>) -> Result<ExitCode> {
    let mut plan = match spec {
        Some(p) => SynthPlan::load(&p).context("reading synth plan")?,
        None => SynthPlan::default(),
    };
    if !failures.is_empty() {
        plan.failures = failures;
    }
    let res = write_synth(&plan, &out)?;
    println!("{} trials written to {}", res.trials, out.display());
    println!("manifest {}", res.manifest_path.display());
    println!(
        "config {} (mean_threshold {:.4}, var_threshold {:.4})",
        res.config_path.display(),
        res.thresholds.0,
        res.thresholds.1
    );
    Ok(ExitCode::SUCCESS)
}

fn agree(pairs: PathBuf, out: PathBuf, level: f64) -> Result<ExitCode> {
    if !(level > 0.0 && level < 1.0) {
        bail!("--level must lie in (0, 1)");
    }
    let records = read_pairs_csv(&pairs)?;
    let report = analyze_records(&records, level);
    write_report(&out, &report, &records)?;
    print_agreement(&report);
    if report.metrics.is_empty() {
        eprintln!("no metric had enough pairs");
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

fn calibrate(
    stream: PathBuf,
    span: (i64, i64),
    k_mean: f64,
    k_var: f64,
    window_ms: f64,
) -> Result<ExitCode> {
    let s = read_stream(&stream)?;
    let section = SwingSection {
        k_mean,
        k_var,
        window_ms,
        ..SwingSection::default()
    };
    section.validate()?;
    let (m, v) = calibrate_from_stream(&s, span.0, span.1, &section)?;
    println!("[swing]");
    println!("mean_threshold = {m}");
    println!("var_threshold = {v}");
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Analyze {
            manifest,
            config,
            out,
        } => analyze(manifest, config, out),
        Command::Synth {
            spec,
            out,
            failures,
        } => synth(spec, out, failures),
        Command::Agree { pairs, out, level } => agree(pairs, out, level),
        Command::CalibrateThresholds {
            stream,
            quiescent,
            k_mean,
            k_var,
            window_ms,
        } => calibrate(stream, quiescent, k_mean, k_var, window_ms),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
