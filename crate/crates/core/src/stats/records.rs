use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::corpus::{parse_utterance_id, UtteranceId};

pub const LONG_FORMAT_HEADER: [&str; 5] = ["subject", "sentence", "type", "mos", "naturalness"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Naturalness {
    Real,
    Artificial,
}

impl fmt::Display for Naturalness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Naturalness::Real => "Real",
            Naturalness::Artificial => "Artificial",
        })
    }
}

impl FromStr for Naturalness {
    type Err = StatsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "Real" | "real" => Ok(Naturalness::Real),
            "Artificial" | "artificial" => Ok(Naturalness::Artificial),
            other => Err(StatsError::Invalid(format!(
                "naturalness must be Real or Artificial, got {other:?}"
            ))),
        }
    }
}

/// One listener judgment. `condition` is an open set declared per study.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub subject_id: String,
    pub utterance_id: UtteranceId,
    pub condition: String,
    pub naturalness: Naturalness,
    pub likert: u8,
    pub timestamp: Option<DateTime<Utc>>,
}

impl RatingRecord {
    pub fn new(
        subject_id: impl Into<String>,
        utterance_id: UtteranceId,
        condition: impl Into<String>,
        naturalness: Naturalness,
        likert: u8,
    ) -> Result<Self, StatsError> {
        if !(1..=5).contains(&likert) {
            return Err(StatsError::LikertRange(likert.into()));
        }
        let subject_id = subject_id.into();
        let condition = condition.into();
        if subject_id.trim().is_empty() || condition.trim().is_empty() {
            return Err(StatsError::Invalid(
                "subject and condition must be non-empty".into(),
            ));
        }
        Ok(RatingRecord {
            subject_id,
            utterance_id,
            condition,
            naturalness,
            likert,
            timestamp: None,
        })
    }

    pub fn with_timestamp(mut self, ts: DateTime<Utc>) -> Self {
        self.timestamp = Some(ts);
        self
    }

    fn key(&self) -> (&str, &UtteranceId, &str) {
        (&self.subject_id, &self.utterance_id, &self.condition)
    }
}

/// Rejects empty input, out-of-range scores and repeated
/// `(subject, utterance, condition)` triples.
pub fn validate_records(records: &[RatingRecord]) -> Result<(), StatsError> {
    if records.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut seen = BTreeSet::new();
    for r in records {
        if !(1..=5).contains(&r.likert) {
            return Err(StatsError::LikertRange(r.likert.into()));
        }
        if !seen.insert(r.key()) {
            return Err(StatsError::DuplicateRating {
                subject: r.subject_id.clone(),
                utterance: r.utterance_id.to_string(),
                condition: r.condition.clone(),
            });
        }
    }
    Ok(())
}

fn sorted_refs(records: &[RatingRecord]) -> Vec<&RatingRecord> {
    let mut v: Vec<&RatingRecord> = records.iter().collect();
    v.sort_by(|a, b| a.key().cmp(&b.key()));
    v
}

/// Long format for mixed-model fitting. Rows are ordered by subject, sentence, type.
pub fn export_long_format(records: &[RatingRecord]) -> Result<String, StatsError> {
    validate_records(records)?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(LONG_FORMAT_HEADER).map_err(csv_err)?;
    for r in sorted_refs(records) {
        let likert = r.likert.to_string();
        let nat = r.naturalness.to_string();
        w.write_record([
            r.subject_id.as_str(),
            r.utterance_id.raw(),
            r.condition.as_str(),
            likert.as_str(),
            nat.as_str(),
        ])
        .map_err(csv_err)?;
    }
    Ok(
        String::from_utf8(w.into_inner().map_err(|e| StatsError::Csv(e.to_string()))?)
            .expect("csv output is utf-8"),
    )
}

pub(crate) fn csv_err(e: csv::Error) -> StatsError {
    StatsError::Csv(e.to_string())
}

/// Header-only input is valid and yields no records; the caller decides
/// whether that is an error.
pub fn parse_long_format(text: &str) -> Result<Vec<RatingRecord>, StatsError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.iter().collect::<Vec<_>>() != LONG_FORMAT_HEADER {
        return Err(StatsError::Row {
            line: 1,
            message: format!("expected header {}", LONG_FORMAT_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        let row_err = |message: String| StatsError::Row { line, message };
        if rec.len() != 5 {
            return Err(row_err(format!("expected 5 fields, got {}", rec.len())));
        }
        let id = parse_utterance_id(&rec[1]).map_err(|e| row_err(e.to_string()))?;
        let likert: u8 = rec[3]
            .parse()
            .map_err(|_| row_err(format!("mos {:?} is not an integer", &rec[3])))?;
        let nat: Naturalness = rec[4]
            .parse()
            .map_err(|e: StatsError| row_err(e.to_string()))?;
        out.push(
            RatingRecord::new(&rec[0], id, &rec[2], nat, likert)
                .map_err(|e| row_err(e.to_string()))?,
        );
    }
    let mut seen = BTreeSet::new();
    for (i, r) in out.iter().enumerate() {
        if !seen.insert(r.key()) {
            return Err(StatsError::Row {
                line: (i + 2) as u64,
                message: "duplicate (subject, sentence, type)".into(),
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rate {
    pub n: usize,
    pub n_real: usize,
    pub percent_real: f64,
}

impl Rate {
    fn from_counts(n: usize, n_real: usize) -> Self {
        Rate {
            n,
            n_real,
            percent_real: 100.0 * n_real as f64 / n as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NaturalnessRates {
    pub by_condition: BTreeMap<String, Rate>,
    #[serde(serialize_with = "super::as_entries")]
    pub by_sentence: BTreeMap<(String, UtteranceId), Rate>,
}

pub fn naturalness_rates(records: &[RatingRecord]) -> Result<NaturalnessRates, StatsError> {
    if records.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut cond: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let mut sent: BTreeMap<(String, UtteranceId), (usize, usize)> = BTreeMap::new();
    for r in records {
        let real = usize::from(r.naturalness == Naturalness::Real);
        let c = cond.entry(r.condition.clone()).or_default();
        c.0 += 1;
        c.1 += real;
        let s = sent
            .entry((r.condition.clone(), r.utterance_id.clone()))
            .or_default();
        s.0 += 1;
        s.1 += real;
    }
    Ok(NaturalnessRates {
        by_condition: cond
            .into_iter()
            .map(|(k, (n, r))| (k, Rate::from_counts(n, r)))
            .collect(),
        by_sentence: sent
            .into_iter()
            .map(|(k, (n, r))| (k, Rate::from_counts(n, r)))
            .collect(),
    })
}
