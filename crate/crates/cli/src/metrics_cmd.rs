use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use rayon::prelude::*;
use serde::Serialize;
use tonaleval::corpus::{parse_utterance_id, UtteranceId};
use tonaleval::metrics::{
    evaluate_pair, render_metrics_csv, summarize, MetricReport, MetricSummary,
};
use tonaleval::signal::{read_wav, resample, FeatureConfig};
use tonaleval::Audio;

use crate::manifest::ManifestBuilder;
use crate::output::{emit, ensure_dir, write};
use crate::{Globals, Report};

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Directory of reference (natural) recordings.
    #[arg(long)]
    ref_dir: PathBuf,
    /// Directory of synthesized recordings.
    #[arg(long)]
    syn_dir: PathBuf,
    /// CSV with an `id` column; optional `ref` and `syn` columns override `<id>.wav`.
    #[arg(long)]
    pairs: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

struct Pair {
    id: UtteranceId,
    reference: PathBuf,
    synth: PathBuf,
}

fn read_pairs(args: &MetricsArgs) -> Result<Vec<Pair>> {
    let text = std::fs::read_to_string(&args.pairs)
        .with_context(|| format!("reading {}", args.pairs.display()))?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let Some(id_col) = col("id") else {
        bail!("{}: header needs an `id` column", args.pairs.display())
    };
    let (ref_col, syn_col) = (col("ref"), col("syn"));
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let id = parse_utterance_id(&rec[id_col])
            .with_context(|| format!("{} line {line}", args.pairs.display()))?;
        let file = |c: Option<usize>| {
            c.map(|c| rec[c].to_string())
                .filter(|s| !s.is_empty())
                .unwrap_or_else(|| format!("{}.wav", id.raw()))
        };
        out.push(Pair {
            reference: args.ref_dir.join(file(ref_col)),
            synth: args.syn_dir.join(file(syn_col)),
            id,
        });
    }
    if out.is_empty() {
        bail!("{}: no pairs", args.pairs.display());
    }
    Ok(out)
}

fn load(path: &Path) -> Result<Audio, String> {
    let bytes = std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    read_wav(&bytes).map_err(|e| format!("{}: {e}", path.display()))
}

fn evaluate(p: &Pair, cfg: &FeatureConfig) -> Result<MetricReport, String> {
    let reference = load(&p.reference)?;
    let synth = load(&p.synth)?;
    // Synthesis is brought to the reference rate before feature extraction.
    let synth = resample(&synth, reference.sample_rate).map_err(|e| format!("{}: {e}", p.id))?;
    cfg.validate_for_rate(reference.sample_rate)
        .map_err(|e| format!("{}: {e}", p.id))?;
    evaluate_pair(p.id.clone(), &reference, &synth, cfg).map_err(|e| format!("{}: {e}", p.id))
}

#[derive(Serialize)]
struct MetricsJson<'a> {
    pairs: &'a [MetricReport],
    summary: MetricSummary,
    errors: &'a [String],
}

pub fn run(g: &Globals, args: &MetricsArgs) -> Result<Report> {
    let pairs = read_pairs(args)?;
    ensure_dir(&args.out)?;
    let results: Vec<Result<MetricReport, String>> =
        pairs.par_iter().map(|p| evaluate(p, &g.config)).collect();
    let mut manifest = ManifestBuilder::new("metrics", g.seed, &g.config);
    manifest.input(&args.pairs);
    let mut reports = Vec::new();
    let mut errors = Vec::new();
    for (p, r) in pairs.iter().zip(results) {
        for f in [&p.reference, &p.synth] {
            if f.is_file() {
                manifest.input(f);
            }
        }
        match r {
            Ok(rep) => reports.push(rep),
            Err(e) => errors.push(e),
        }
    }
    let summary = summarize(&reports);
    let json = MetricsJson {
        pairs: &reports,
        summary: summary.clone(),
        errors: &errors,
    };
    emit(
        &args.out,
        "metrics",
        g.format,
        &render_metrics_csv(&reports),
        &json,
    )?;
    if !errors.is_empty() {
        write(&args.out.join("errors.txt"), errors.join("\n") + "\n")?;
    }
    manifest.write(&args.out, errors.len())?;
    let show = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.4}"));
    println!(
        "{} pairs: MCD {} dB, RMSE_f0 {} Hz, F0 corr {}",
        reports.len(),
        show(summary.mcd_db),
        show(summary.rmse_f0_hz),
        show(summary.f0_corr)
    );
    Ok(Report { errors })
}
