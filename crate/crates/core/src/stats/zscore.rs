use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{mean_sd, RatingRecord, StatsError};
use crate::corpus::UtteranceId;

/// Which groups the rescaled per-condition mean averages over.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Grouping {
    /// Every z-score of the condition pooled.
    #[default]
    Condition,
    /// Mean of the per-(condition, sentence) scaled values, each sentence weighted equally.
    ConditionSentence,
}

impl FromStr for Grouping {
    type Err = StatsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "condition" => Ok(Grouping::Condition),
            "condition-sentence" => Ok(Grouping::ConditionSentence),
            other => Err(StatsError::Invalid(format!(
                "grouping must be condition or condition-sentence, got {other:?}"
            ))),
        }
    }
}

impl fmt::Display for Grouping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Grouping::Condition => "condition",
            Grouping::ConditionSentence => "condition-sentence",
        })
    }
}

/// A real-valued rating. The Likert path goes through this too.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    pub subject: &'a str,
    pub condition: &'a str,
    pub utterance: &'a UtteranceId,
    pub value: f64,
}

impl<'a> From<&'a RatingRecord> for Observation<'a> {
    fn from(r: &'a RatingRecord) -> Self {
        Observation {
            subject: &r.subject_id,
            condition: &r.condition,
            utterance: &r.utterance_id,
            value: f64::from(r.likert),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Reference {
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExclusionReason {
    SingleRating,
    ZeroVariance,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExcludedSubject {
    pub subject: String,
    pub n_ratings: usize,
    pub reason: ExclusionReason,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    pub n: usize,
    pub mean_z: f64,
    pub scaled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZScoreResult {
    pub reference: Reference,
    pub grouping: Grouping,
    #[serde(serialize_with = "super::as_entries")]
    pub cells: BTreeMap<(String, UtteranceId), Cell>,
    pub condition_means: BTreeMap<String, f64>,
    pub excluded: Vec<ExcludedSubject>,
}

/// Per-subject z-scores mapped back to the rating scale:
/// `scaled = global_mean + global_sd * mean(z)`.
///
/// Global statistics come from every value in `records`, including subjects
/// that are excluded from z-normalization.
pub fn zscore_rescale(
    records: &[RatingRecord],
    grouping: Grouping,
) -> Result<ZScoreResult, StatsError> {
    let obs: Vec<Observation<'_>> = records.iter().map(Observation::from).collect();
    zscore_rescale_observations(&obs, grouping, None)
}

/// As [`zscore_rescale`], optionally against a fixed reference scale instead
/// of the statistics of `obs` itself.
pub fn zscore_rescale_observations(
    obs: &[Observation<'_>],
    grouping: Grouping,
    reference: Option<Reference>,
) -> Result<ZScoreResult, StatsError> {
    if obs.is_empty() {
        return Err(StatsError::Empty);
    }
    let reference = match reference {
        Some(r) => r,
        None => {
            let (mean, sd) = mean_sd(obs.iter().map(|o| o.value));
            Reference {
                mean,
                sd: sd.unwrap_or(0.0),
            }
        }
    };

    let mut by_subject: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for o in obs {
        by_subject.entry(o.subject).or_default().push(o.value);
    }
    let mut subject_stats: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
    let mut excluded = Vec::new();
    for (subject, values) in &by_subject {
        let (m, sd) = mean_sd(values.iter().copied());
        let reason = match sd {
            None => Some(ExclusionReason::SingleRating),
            Some(0.0) => Some(ExclusionReason::ZeroVariance),
            Some(_) => None,
        };
        match reason {
            Some(reason) => {
                tracing::warn!(
                    subject,
                    n = values.len(),
                    ?reason,
                    "subject excluded from z-normalization"
                );
                excluded.push(ExcludedSubject {
                    subject: subject.to_string(),
                    n_ratings: values.len(),
                    reason,
                });
            }
            None => {
                subject_stats.insert(subject, (m, sd.unwrap_or(1.0)));
            }
        }
    }
    if subject_stats.is_empty() {
        return Err(StatsError::NoUsableSubjects);
    }

    let mut cell_sums: BTreeMap<(String, UtteranceId), (f64, usize)> = BTreeMap::new();
    let mut cond_sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for o in obs {
        let Some(&(m, sd)) = subject_stats.get(o.subject) else {
            continue;
        };
        let z = (o.value - m) / sd;
        let c = cell_sums
            .entry((o.condition.to_string(), o.utterance.clone()))
            .or_default();
        c.0 += z;
        c.1 += 1;
        let c = cond_sums.entry(o.condition.to_string()).or_default();
        c.0 += z;
        c.1 += 1;
    }
    let scale = |mean_z: f64| reference.mean + reference.sd * mean_z;
    let cells: BTreeMap<_, _> = cell_sums
        .into_iter()
        .map(|(k, (sum, n))| {
            let mean_z = sum / n as f64;
            (
                k,
                Cell {
                    n,
                    mean_z,
                    scaled: scale(mean_z),
                },
            )
        })
        .collect();
    let condition_means = match grouping {
        Grouping::Condition => cond_sums
            .into_iter()
            .map(|(k, (sum, n))| (k, scale(sum / n as f64)))
            .collect(),
        Grouping::ConditionSentence => {
            let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
            for ((cond, _), cell) in &cells {
                let e = acc.entry(cond.clone()).or_default();
                e.0 += cell.scaled;
                e.1 += 1;
            }
            acc.into_iter()
                .map(|(k, (sum, n))| (k, sum / n as f64))
                .collect()
        }
    };
    Ok(ZScoreResult {
        reference,
        grouping,
        cells,
        condition_means,
        excluded,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MosRow {
    pub condition: String,
    pub n: usize,
    pub raw_mean: f64,
    /// Absent when every rater of the condition was excluded.
    pub scaled_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MosSummary {
    pub rows: Vec<MosRow>,
    /// `None` when no subject has usable variance.
    pub rescale: Option<ZScoreResult>,
}

impl MosSummary {
    pub fn row(&self, condition: &str) -> Option<&MosRow> {
        self.rows.iter().find(|r| r.condition == condition)
    }
}

/// Raw Likert means use every rating; scaled means use [`zscore_rescale`].
pub fn mos_summary(records: &[RatingRecord], grouping: Grouping) -> Result<MosSummary, StatsError> {
    let rescale = match zscore_rescale(records, grouping) {
        Ok(z) => Some(z),
        Err(StatsError::NoUsableSubjects) => None,
        Err(e) => return Err(e),
    };
    let mut raw: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for r in records {
        let e = raw.entry(&r.condition).or_default();
        e.0 += f64::from(r.likert);
        e.1 += 1;
    }
    let rows = raw
        .into_iter()
        .map(|(cond, (sum, n))| MosRow {
            condition: cond.to_string(),
            n,
            raw_mean: sum / n as f64,
            scaled_mean: rescale
                .as_ref()
                .and_then(|z| z.condition_means.get(cond).copied()),
        })
        .collect();
    Ok(MosSummary { rows, rescale })
}
