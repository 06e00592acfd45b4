use serde::Serialize;

use super::{dtw_align, f0_corr, mcd, rmse_f0, MetricError};
use crate::corpus::UtteranceId;
use crate::scalar::Scalar;
use crate::signal::{estimate_f0, mfcc, AudioBuffer, FeatureConfig};

pub const METRIC_HEADER: [&str; 6] = [
    "id",
    "mcd_db",
    "rmse_f0_hz",
    "f0_corr",
    "n_aligned_frames",
    "n_voiced_pairs",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub utterance_id: UtteranceId,
    pub mcd_db: f64,
    pub rmse_f0_hz: Option<f64>,
    pub f0_corr: Option<f64>,
    pub n_aligned_frames: usize,
    pub n_voiced_pairs: usize,
    pub config: FeatureConfig,
}

/// MFCC + F0 extraction on both signals, one DTW alignment on `c1..`, then MCD,
/// RMSE_f0 and F0 correlation over that path.
pub fn evaluate_pair<T: Scalar>(
    id: UtteranceId,
    reference: &AudioBuffer<T>,
    synth: &AudioBuffer<T>,
    cfg: &FeatureConfig,
) -> Result<MetricReport, MetricError> {
    if reference.sample_rate != synth.sample_rate {
        return Err(MetricError::SampleRateMismatch(
            reference.sample_rate,
            synth.sample_rate,
        ));
    }
    let ref_mfcc = mfcc(reference, cfg)?;
    let syn_mfcc = mfcc(synth, cfg)?;
    let ref_f0 = estimate_f0(reference, cfg)?;
    let syn_f0 = estimate_f0(synth, cfg)?;
    let alignment = dtw_align(&ref_mfcc, &syn_mfcc)?;
    let path = &alignment.path;
    let distortion = mcd(&ref_mfcc, &syn_mfcc, path)?;
    let rmse = rmse_f0(&ref_f0, &syn_f0, path)?;
    let corr = f0_corr(&ref_f0, &syn_f0, path)?;
    Ok(MetricReport {
        utterance_id: id,
        mcd_db: distortion.to_f64_lossy(),
        rmse_f0_hz: rmse.rmse.map(Scalar::to_f64_lossy),
        f0_corr: corr.value().map(Scalar::to_f64_lossy),
        n_aligned_frames: path.len(),
        n_voiced_pairs: rmse.n_voiced_pairs,
        config: cfg.clone(),
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_default()
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Column means over defined values; the row used as the `MEAN` summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSummary {
    pub n_pairs: usize,
    pub mcd_db: Option<f64>,
    pub rmse_f0_hz: Option<f64>,
    pub f0_corr: Option<f64>,
}

pub fn summarize(reports: &[MetricReport]) -> MetricSummary {
    MetricSummary {
        n_pairs: reports.len(),
        mcd_db: mean(reports.iter().map(|r| r.mcd_db)),
        rmse_f0_hz: mean(reports.iter().filter_map(|r| r.rmse_f0_hz)),
        f0_corr: mean(reports.iter().filter_map(|r| r.f0_corr)),
    }
}

/// One row per report followed by a `MEAN` row. Undefined values are empty fields.
pub fn render_metrics_csv(reports: &[MetricReport]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(METRIC_HEADER).expect("in-memory write");
    for r in reports {
        w.write_record([
            r.utterance_id.raw().to_string(),
            format!("{:.4}", r.mcd_db),
            fmt_opt(r.rmse_f0_hz),
            fmt_opt(r.f0_corr),
            r.n_aligned_frames.to_string(),
            r.n_voiced_pairs.to_string(),
        ])
        .expect("in-memory write");
    }
    let s = summarize(reports);
    let frames: usize = reports.iter().map(|r| r.n_aligned_frames).sum();
    let voiced: usize = reports.iter().map(|r| r.n_voiced_pairs).sum();
    w.write_record([
        "MEAN".to_string(),
        fmt_opt(s.mcd_db),
        fmt_opt(s.rmse_f0_hz),
        fmt_opt(s.f0_corr),
        frames.to_string(),
        voiced.to_string(),
    ])
    .expect("in-memory write");
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}
