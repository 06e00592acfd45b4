//! Listening-test analytics: per-subject z-score rescaling, MOS summaries,
//! paired t-tests, Bonferroni comparisons and naturalness rates.

mod compare;
pub mod dist;
mod records;
mod zscore;

use thiserror::Error;

pub use compare::{
    ingest_scores, paired_t_test, pairwise_bonferroni, PairedScores, PairwiseComparison,
    ScoreTable, TTestResult, SCORE_HEADER,
};
pub use records::{
    export_long_format, naturalness_rates, parse_long_format, validate_records, Naturalness,
    NaturalnessRates, Rate, RatingRecord, LONG_FORMAT_HEADER,
};
pub use zscore::{
    mos_summary, zscore_rescale, zscore_rescale_observations, Cell, ExcludedSubject,
    ExclusionReason, Grouping, MosRow, MosSummary, Observation, Reference, ZScoreResult,
};

#[derive(Debug, Error, PartialEq, Clone)]
pub enum StatsError {
    #[error("no records")]
    Empty,
    #[error("likert score {0} outside 1..=5")]
    LikertRange(u32),
    #[error(
        "duplicate rating for subject {subject}, utterance {utterance}, condition {condition}"
    )]
    DuplicateRating {
        subject: String,
        utterance: String,
        condition: String,
    },
    #[error("vectors differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("a paired test needs at least 2 pairs, got {0}")]
    TooFewPairs(usize),
    #[error("all differences are equal (mean {mean_difference}); t is undefined")]
    Degenerate { mean_difference: f64, df: usize },
    #[error("at least 2 conditions are required, got {0}")]
    TooFewConditions(usize),
    #[error("conditions {first} and {second} share no utterances")]
    NoSharedUtterances { first: String, second: String },
    #[error("every subject was excluded from z-normalization")]
    NoUsableSubjects,
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("csv: {0}")]
    Csv(String),
    #[error("{0}")]
    Invalid(String),
}

/// Mean and sample (n - 1) standard deviation; `sd` is `None` below two values.
pub(crate) fn mean_sd(values: impl Iterator<Item = f64> + Clone) -> (f64, Option<f64>) {
    let (sum, n) = values
        .clone()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        return (f64::NAN, None);
    }
    let mean = sum / n as f64;
    if n < 2 {
        return (mean, None);
    }
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (mean, Some((ss / (n - 1) as f64).sqrt()))
}

/// Serializes a map with composite keys as a list of `[key, value]` pairs,
/// since JSON object keys must be strings.
pub(crate) fn as_entries<K: serde::Serialize, V: serde::Serialize, S: serde::Serializer>(
    map: &std::collections::BTreeMap<K, V>,
    s: S,
) -> Result<S::Ok, S::Error> {
    s.collect_seq(map.iter())
}

/// Scientific notation with 4 significant digits.
pub fn format_p(p: f64) -> String {
    format!("{p:.3e}")
}

fn fmt4(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_default()
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

/// `condition,n,raw_mean,scaled_mean`.
pub fn render_mos_csv(summary: &MosSummary) -> String {
    let mut w = writer();
    w.write_record(["condition", "n", "raw_mean", "scaled_mean"])
        .expect("in-memory write");
    for r in &summary.rows {
        w.write_record([
            r.condition.clone(),
            r.n.to_string(),
            format!("{:.4}", r.raw_mean),
            fmt4(r.scaled_mean),
        ])
        .expect("in-memory write");
    }
    finish(w)
}

/// `first,second,n,estimate,t,df,p,p_adjusted`; degenerate rows leave `t` and both p columns empty.
pub fn render_pairwise_csv(rows: &[PairwiseComparison]) -> String {
    let mut w = writer();
    w.write_record([
        "first",
        "second",
        "n",
        "estimate",
        "t",
        "df",
        "p",
        "p_adjusted",
    ])
    .expect("in-memory write");
    for r in rows {
        w.write_record([
            r.first.clone(),
            r.second.clone(),
            r.n.to_string(),
            format!("{:.4}", r.estimate),
            fmt4(r.t),
            r.df.to_string(),
            r.p.map(format_p).unwrap_or_default(),
            r.p_adjusted.map(format_p).unwrap_or_default(),
        ])
        .expect("in-memory write");
    }
    finish(w)
}

/// Returns `(per condition, per sentence)` tables.
pub fn render_rates_csv(rates: &NaturalnessRates) -> (String, String) {
    let mut w = writer();
    w.write_record(["condition", "n", "n_real", "percent_real"])
        .expect("in-memory write");
    for (c, r) in &rates.by_condition {
        w.write_record([
            c.clone(),
            r.n.to_string(),
            r.n_real.to_string(),
            format!("{:.4}", r.percent_real),
        ])
        .expect("in-memory write");
    }
    let overall = finish(w);
    let mut w = writer();
    w.write_record(["condition", "id", "n", "n_real", "percent_real"])
        .expect("in-memory write");
    for ((c, id), r) in &rates.by_sentence {
        w.write_record([
            c.clone(),
            id.to_string(),
            r.n.to_string(),
            r.n_real.to_string(),
            format!("{:.4}", r.percent_real),
        ])
        .expect("in-memory write");
    }
    (overall, finish(w))
}
