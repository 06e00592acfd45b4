//! Tone error rate over tone-bearing units (TBUs).

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::corpus::{parse_utterance_id, UtteranceId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Tone {
    High,
    Low,
    Rising,
    Falling,
}

impl Tone {
    pub const ALL: [Tone; 4] = [Tone::High, Tone::Low, Tone::Rising, Tone::Falling];
}

impl fmt::Display for Tone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tone::High => "High",
            Tone::Low => "Low",
            Tone::Rising => "Rising",
            Tone::Falling => "Falling",
        })
    }
}

impl FromStr for Tone {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "high" | "h" => Ok(Tone::High),
            "low" | "l" => Ok(Tone::Low),
            "rising" | "r" => Ok(Tone::Rising),
            "falling" | "f" => Ok(Tone::Falling),
            other => Err(format!("unknown tone `{other}`")),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TerError {
    #[error("{0}: sentence has no tone-bearing units")]
    ZeroTbu(UtteranceId),
    #[error("{id}: error index {index} is not below n_tbu {n_tbu}")]
    IndexOutOfRange {
        id: UtteranceId,
        index: usize,
        n_tbu: usize,
    },
    #[error("{id}: TBU {index} marked more than once")]
    DuplicateIndex { id: UtteranceId, index: usize },
    #[error("no annotations")]
    Empty,
    #[error("no tone errors to distribute")]
    NoErrors,
    #[error("line {line}: {message}")]
    Row { line: usize, message: String },
    #[error("cannot read annotation CSV: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ToneError {
    pub tbu_index: usize,
    pub intended: Tone,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToneAnnotation {
    utterance_id: UtteranceId,
    n_tbu: usize,
    errors: Vec<ToneError>,
}

impl ToneAnnotation {
    pub fn new(
        utterance_id: UtteranceId,
        n_tbu: usize,
        errors: Vec<ToneError>,
    ) -> Result<Self, TerError> {
        if n_tbu == 0 {
            return Err(TerError::ZeroTbu(utterance_id));
        }
        let mut seen = HashSet::new();
        for e in &errors {
            if e.tbu_index >= n_tbu {
                return Err(TerError::IndexOutOfRange {
                    id: utterance_id,
                    index: e.tbu_index,
                    n_tbu,
                });
            }
            if !seen.insert(e.tbu_index) {
                return Err(TerError::DuplicateIndex {
                    id: utterance_id,
                    index: e.tbu_index,
                });
            }
        }
        Ok(ToneAnnotation {
            utterance_id,
            n_tbu,
            errors,
        })
    }

    pub fn utterance_id(&self) -> &UtteranceId {
        &self.utterance_id
    }

    pub fn n_tbu(&self) -> usize {
        self.n_tbu
    }

    pub fn errors(&self) -> &[ToneError] {
        &self.errors
    }
}

/// `100 * errors / n_tbu`.
pub fn ter(annotation: &ToneAnnotation) -> f64 {
    100.0 * annotation.errors.len() as f64 / annotation.n_tbu as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TerRow {
    pub id: String,
    pub n_tbu: usize,
    pub n_errors: usize,
    pub ter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TerSummary {
    /// Unweighted mean of per-sentence TER.
    pub average: f64,
    pub rows: Vec<TerRow>,
}

pub fn ter_summary(annotations: &[ToneAnnotation]) -> Result<TerSummary, TerError> {
    if annotations.is_empty() {
        return Err(TerError::Empty);
    }
    let rows: Vec<TerRow> = annotations
        .iter()
        .map(|a| TerRow {
            id: a.utterance_id.raw().to_string(),
            n_tbu: a.n_tbu,
            n_errors: a.errors.len(),
            ter: ter(a),
        })
        .collect();
    let average = rows.iter().map(|r| r.ter).sum::<f64>() / rows.len() as f64;
    Ok(TerSummary { average, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToneDistribution {
    pub n_errors: usize,
    pub counts: BTreeMap<Tone, usize>,
    /// Share of pooled errors per intended tone, in percent; every tone is present.
    pub percent: BTreeMap<Tone, f64>,
}

pub fn tone_error_distribution(
    annotations: &[ToneAnnotation],
) -> Result<ToneDistribution, TerError> {
    let mut counts: BTreeMap<Tone, usize> = Tone::ALL.iter().map(|&t| (t, 0)).collect();
    for e in annotations.iter().flat_map(|a| &a.errors) {
        *counts.get_mut(&e.intended).expect("all tones present") += 1;
    }
    let n_errors: usize = counts.values().sum();
    if n_errors == 0 {
        return Err(TerError::NoErrors);
    }
    let percent = counts
        .iter()
        .map(|(&t, &c)| (t, 100.0 * c as f64 / n_errors as f64))
        .collect();
    Ok(ToneDistribution {
        n_errors,
        counts,
        percent,
    })
}

/// Reads `id,n_tbu,error_index,intended_tone`, one row per error. A row with
/// empty error fields declares an error-free sentence. Sentences keep the order
/// of their first row.
pub fn parse_tone_annotations(csv_text: &str) -> Result<Vec<ToneAnnotation>, TerError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(csv_text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| TerError::Csv(e.to_string()))?
        .clone();
    let expected = ["id", "n_tbu", "error_index", "intended_tone"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(TerError::Row {
            line: 1,
            message: format!("header must be `{}`", expected.join(",")),
        });
    }
    let mut order: Vec<UtteranceId> = Vec::new();
    let mut groups: HashMap<UtteranceId, (usize, usize, Vec<ToneError>)> = HashMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| TerError::Csv(e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let row_err = |m: String| TerError::Row { line, message: m };
        let id = parse_utterance_id(&record[0]).map_err(|e| row_err(e.to_string()))?;
        let n_tbu: usize = record[1]
            .parse()
            .map_err(|_| row_err(format!("bad n_tbu `{}`", &record[1])))?;
        let entry = groups.entry(id.clone()).or_insert_with(|| {
            order.push(id.clone());
            (n_tbu, line, Vec::new())
        });
        if entry.0 != n_tbu {
            return Err(row_err(format!(
                "n_tbu {n_tbu} conflicts with {} declared on line {}",
                entry.0, entry.1
            )));
        }
        match (record[2].is_empty(), record[3].is_empty()) {
            (true, true) => {}
            (false, false) => {
                let index: usize = record[2]
                    .parse()
                    .map_err(|_| row_err(format!("bad error_index `{}`", &record[2])))?;
                if n_tbu == 0 || index >= n_tbu {
                    return Err(row_err(format!(
                        "error index {index} is not below n_tbu {n_tbu}"
                    )));
                }
                if entry.2.iter().any(|e| e.tbu_index == index) {
                    return Err(row_err(format!("TBU {index} of {id} marked twice")));
                }
                let intended: Tone = record[3].parse().map_err(row_err)?;
                entry.2.push(ToneError {
                    tbu_index: index,
                    intended,
                });
            }
            _ => {
                return Err(row_err(
                    "error_index and intended_tone must both be set or both be empty".into(),
                ))
            }
        }
    }
    order
        .into_iter()
        .map(|id| {
            let (n_tbu, line, errors) = groups.remove(&id).expect("grouped");
            ToneAnnotation::new(id, n_tbu, errors).map_err(|e| TerError::Row {
                line,
                message: e.to_string(),
            })
        })
        .collect()
}
