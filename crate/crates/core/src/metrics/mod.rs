//! Objective evaluation: DTW, mel cepstral distortion, F0 error and
//! correlation, and tone error rates.

mod dtw;
mod objective;
mod report;
mod ter;

use thiserror::Error;

pub use dtw::{cepstral_distance, dtw_align, dtw_with, Alignment, AlignmentPath};
pub use objective::{f0_corr, mcd, pearson, rmse_f0, Correlation, F0Rmse, UndefinedReason};
pub use report::{
    evaluate_pair, render_metrics_csv, summarize, MetricReport, MetricSummary, METRIC_HEADER,
};
pub use ter::{
    parse_tone_annotations, ter, ter_summary, tone_error_distribution, TerError, TerRow,
    TerSummary, Tone, ToneAnnotation, ToneDistribution, ToneError,
};

use crate::signal::{F0Error, FeatureError};

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("empty feature sequence")]
    Empty,
    #[error("coefficient count mismatch: {0} vs {1}")]
    CoefficientMismatch(usize, usize),
    #[error("MCD needs at least 2 coefficients, got {0}")]
    TooFewCoefficients(usize),
    #[error("invalid alignment path: {0}")]
    InvalidPath(String),
    #[error("sample rates differ: {0} Hz vs {1} Hz")]
    SampleRateMismatch(u32, u32),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    F0(#[from] F0Error),
}
