use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::dist::student_t_two_sided;
use super::records::csv_err;
use super::{mean_sd, zscore_rescale, Grouping, RatingRecord, StatsError};
use crate::corpus::{parse_utterance_id, UtteranceId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TTestResult {
    pub mean_difference: f64,
    pub t_value: f64,
    pub df: usize,
    /// Two-sided.
    pub p_value: f64,
}

/// Paired t-test on `x - y`.
pub fn paired_t_test(x: &[f64], y: &[f64]) -> Result<TTestResult, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 2 {
        return Err(StatsError::TooFewPairs(n));
    }
    let (mean, sd) = mean_sd(x.iter().zip(y).map(|(a, b)| a - b));
    let sd = sd.expect("n >= 2");
    let df = n - 1;
    if sd == 0.0 {
        return Err(StatsError::Degenerate {
            mean_difference: mean,
            df,
        });
    }
    let t = mean / (sd / (n as f64).sqrt());
    Ok(TTestResult {
        mean_difference: mean,
        t_value: t,
        df,
        p_value: student_t_two_sided(t, df as f64),
    })
}

/// One row of a pairwise table. `t`, `p` and `p_adjusted` are absent for a
/// degenerate comparison (all differences equal).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairwiseComparison {
    pub first: String,
    pub second: String,
    pub n: usize,
    pub estimate: f64,
    pub df: usize,
    pub t: Option<f64>,
    pub p: Option<f64>,
    pub p_adjusted: Option<f64>,
}

fn compare(
    first: &str,
    second: &str,
    x: &[f64],
    y: &[f64],
    m: usize,
) -> Result<PairwiseComparison, StatsError> {
    let (estimate, df, test) = match paired_t_test(x, y) {
        Ok(r) => (r.mean_difference, r.df, Some(r)),
        Err(StatsError::Degenerate {
            mean_difference,
            df,
        }) => (mean_difference, df, None),
        Err(e) => return Err(e),
    };
    Ok(PairwiseComparison {
        first: first.to_string(),
        second: second.to_string(),
        n: x.len(),
        estimate,
        df,
        t: test.map(|r| r.t_value),
        p: test.map(|r| r.p_value),
        p_adjusted: test.map(|r| (r.p_value * m as f64).min(1.0)),
    })
}

/// Paired vectors for every condition pair over the utterances both share.
fn pairwise_over(
    table: &BTreeMap<String, BTreeMap<UtteranceId, f64>>,
    m_adjust: impl Fn(usize) -> usize,
) -> Result<Vec<PairwiseComparison>, StatsError> {
    if table.len() < 2 {
        return Err(StatsError::TooFewConditions(table.len()));
    }
    let conds: Vec<&String> = table.keys().collect();
    let n_pairs = conds.len() * (conds.len() - 1) / 2;
    let m = m_adjust(n_pairs);
    let mut out = Vec::with_capacity(n_pairs);
    for (i, a) in conds.iter().enumerate() {
        for b in &conds[i + 1..] {
            let (ta, tb) = (&table[*a], &table[*b]);
            let shared: Vec<&UtteranceId> = ta.keys().filter(|k| tb.contains_key(*k)).collect();
            let dropped = ta.len() + tb.len() - 2 * shared.len();
            if dropped > 0 {
                tracing::warn!(first = %a, second = %b, dropped, "utterances without a partner excluded from pairing");
            }
            if shared.is_empty() {
                return Err(StatsError::NoSharedUtterances {
                    first: a.to_string(),
                    second: b.to_string(),
                });
            }
            let x: Vec<f64> = shared.iter().map(|k| ta[*k]).collect();
            let y: Vec<f64> = shared.iter().map(|k| tb[*k]).collect();
            out.push(compare(a, b, &x, &y, m)?);
        }
    }
    Ok(out)
}

/// Bonferroni-adjusted paired t-tests between conditions on the
/// per-(condition, utterance) rescaled means.
pub fn pairwise_bonferroni(
    records: &[RatingRecord],
    grouping: Grouping,
) -> Result<Vec<PairwiseComparison>, StatsError> {
    let z = zscore_rescale(records, grouping)?;
    let mut table: BTreeMap<String, BTreeMap<UtteranceId, f64>> = BTreeMap::new();
    for ((cond, utt), cell) in &z.cells {
        table
            .entry(cond.clone())
            .or_default()
            .insert(utt.clone(), cell.scaled);
    }
    pairwise_over(&table, |m| m)
}

pub const SCORE_HEADER: [&str; 3] = ["condition", "id", "score"];

/// Externally computed per-utterance scores (DNSMOS or any scalar metric).
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ScoreTable {
    pub scores: BTreeMap<String, BTreeMap<UtteranceId, f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairedScores {
    pub ids: Vec<UtteranceId>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Present in exactly one of the two conditions.
    pub unpaired: Vec<UtteranceId>,
}

impl ScoreTable {
    pub fn conditions(&self) -> impl Iterator<Item = &str> {
        self.scores.keys().map(String::as_str)
    }

    pub fn get(&self, condition: &str, id: &UtteranceId) -> Option<f64> {
        self.scores.get(condition)?.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.scores.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Aligned vectors over utterances scored in both conditions.
    pub fn paired(&self, first: &str, second: &str) -> Result<PairedScores, StatsError> {
        let empty = BTreeMap::new();
        let a = self.scores.get(first).unwrap_or(&empty);
        let b = self.scores.get(second).unwrap_or(&empty);
        let all: BTreeSet<&UtteranceId> = a.keys().chain(b.keys()).collect();
        let mut out = PairedScores {
            ids: Vec::new(),
            x: Vec::new(),
            y: Vec::new(),
            unpaired: Vec::new(),
        };
        for id in all {
            match (a.get(id), b.get(id)) {
                (Some(x), Some(y)) => {
                    out.ids.push(id.clone());
                    out.x.push(*x);
                    out.y.push(*y);
                }
                _ => out.unpaired.push(id.clone()),
            }
        }
        if !out.unpaired.is_empty() {
            tracing::warn!(
                first,
                second,
                n = out.unpaired.len(),
                "unpaired ids excluded"
            );
        }
        Ok(out)
    }

    /// Mean score per condition.
    pub fn means(&self) -> BTreeMap<String, f64> {
        self.scores
            .iter()
            .map(|(c, m)| (c.clone(), m.values().sum::<f64>() / m.len() as f64))
            .collect()
    }

    /// Unadjusted paired t-tests for every condition pair.
    pub fn pairwise_t_tests(&self) -> Result<Vec<PairwiseComparison>, StatsError> {
        pairwise_over(&self.scores, |_| 1)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(SCORE_HEADER).expect("in-memory write");
        for (cond, m) in &self.scores {
            for (id, v) in m {
                w.write_record([cond.as_str(), id.raw(), &v.to_string()])
                    .expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

/// Parses `condition,id,score`. Duplicate `(condition, id)` keys and
/// non-finite scores are errors carrying the line number.
pub fn ingest_scores(text: &str) -> Result<ScoreTable, StatsError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.iter().collect::<Vec<_>>() != SCORE_HEADER {
        return Err(StatsError::Row {
            line: 1,
            message: format!("expected header {}", SCORE_HEADER.join(",")),
        });
    }
    let mut table = ScoreTable::default();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        let row_err = |message: String| StatsError::Row { line, message };
        if rec.len() != 3 {
            return Err(row_err(format!("expected 3 fields, got {}", rec.len())));
        }
        let id = parse_utterance_id(&rec[1]).map_err(|e| row_err(e.to_string()))?;
        let score: f64 = rec[2]
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| row_err(format!("score {:?} is not a finite number", &rec[2])))?;
        if rec[0].is_empty() {
            return Err(row_err("empty condition".into()));
        }
        if table
            .scores
            .entry(rec[0].to_string())
            .or_default()
            .insert(id, score)
            .is_some()
        {
            return Err(row_err(format!("duplicate key ({}, {})", &rec[0], &rec[1])));
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::Naturalness;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn id(s: &str) -> UtteranceId {
        parse_utterance_id(s).unwrap()
    }

    #[test]
    fn t_test_reference() {
        let r = paired_t_test(&[1.0, 2.0, 3.0, 4.0, 5.0], &[0.0; 5]).unwrap();
        assert!((r.t_value - 18f64.sqrt()).abs() < 1e-12);
        assert_eq!(r.df, 4);
        assert!((r.p_value - 0.013_235_6).abs() < 1e-6);
        assert_eq!(r.mean_difference, 3.0);
    }

    #[test]
    fn t_test_degenerate_and_shape() {
        let x = [2.0, 3.0, 4.0];
        assert_eq!(
            paired_t_test(&x, &x),
            Err(StatsError::Degenerate {
                mean_difference: 0.0,
                df: 2
            })
        );
        assert_eq!(
            paired_t_test(&x, &[1.0, 2.0]),
            Err(StatsError::LengthMismatch(3, 2))
        );
        assert_eq!(
            paired_t_test(&[1.0], &[0.0]),
            Err(StatsError::TooFewPairs(1))
        );
        let y: Vec<f64> = (0..25).map(|i| f64::from(i) * 0.1).collect();
        let x: Vec<f64> = y
            .iter()
            .enumerate()
            .map(|(i, v)| v + (i % 3) as f64)
            .collect();
        assert_eq!(paired_t_test(&x, &y).unwrap().df, 24);
    }

    #[test]
    fn t_test_antisymmetric() {
        let x = [3.1, 2.2, 4.8, 3.9, 4.4, 2.5];
        let y = [2.0, 2.9, 3.1, 3.0, 4.0, 1.0];
        let a = paired_t_test(&x, &y).unwrap();
        let b = paired_t_test(&y, &x).unwrap();
        assert_eq!(a.mean_difference, -b.mean_difference);
        assert_eq!(a.t_value, -b.t_value);
        assert!((a.p_value - b.p_value).abs() < 1e-15);
    }

    fn synthetic_study(
        offsets: &[(&str, f64)],
        n_subjects: usize,
        n_items: u32,
        seed: u64,
    ) -> Vec<RatingRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bases: Vec<f64> = (0..n_items).map(|_| rng.random_range(3.0..4.0)).collect();
        let mut out = Vec::new();
        for s in 0..n_subjects {
            for (i, base) in bases.iter().enumerate() {
                for (cond, off) in offsets {
                    // Uniform dither makes the rounded rating unbiased.
                    let v = (base + off + rng.random_range(-0.5..0.5))
                        .round()
                        .clamp(1.0, 5.0) as u8;
                    let utt = id(&format!("MZ001-{}", i + 1));
                    out.push(
                        RatingRecord::new(format!("s{s}"), utt, *cond, Naturalness::Real, v)
                            .unwrap(),
                    );
                }
            }
        }
        out
    }

    #[test]
    fn bonferroni_recovers_offsets() {
        let records = synthetic_study(
            &[("Natural", 0.0), ("Tacotron2", -1.45), ("VITS", -0.93)],
            35,
            25,
            7,
        );
        let rows = pairwise_bonferroni(&records, Grouping::Condition).unwrap();
        assert_eq!(rows.len(), 3);
        let get = |a: &str, b: &str| rows.iter().find(|r| r.first == a && r.second == b).unwrap();
        let nt = get("Natural", "Tacotron2");
        let nv = get("Natural", "VITS");
        assert!((nt.estimate - 1.45).abs() < 0.05, "{}", nt.estimate);
        assert!((nv.estimate - 0.93).abs() < 0.05, "{}", nv.estimate);
        for r in &rows {
            assert_eq!(r.n, 25);
            assert_eq!(r.df, 24);
            let (p, adj) = (r.p.unwrap(), r.p_adjusted.unwrap());
            assert!(adj >= p && adj <= 1.0);
            assert!((adj - (3.0 * p).min(1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn bonferroni_identical_copies() {
        let mut records = synthetic_study(&[("A", 0.0)], 8, 6, 3);
        let copies: Vec<RatingRecord> = records
            .iter()
            .map(|r| RatingRecord {
                condition: "B".into(),
                ..r.clone()
            })
            .collect();
        records.extend(copies);
        let rows = pairwise_bonferroni(&records, Grouping::Condition).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].estimate, 0.0);
        assert_eq!(rows[0].t, None);
        assert_eq!(rows[0].p_adjusted, None);
    }

    #[test]
    fn bonferroni_needs_shared_utterances() {
        let a = RatingRecord::new("s", id("MZ001-1"), "A", Naturalness::Real, 2).unwrap();
        let b = RatingRecord::new("s", id("MZ001-2"), "B", Naturalness::Real, 4).unwrap();
        assert!(matches!(
            pairwise_bonferroni(&[a.clone(), b], Grouping::Condition),
            Err(StatsError::NoSharedUtterances { .. })
        ));
        let a2 = RatingRecord::new("s", id("MZ001-2"), "A", Naturalness::Real, 4).unwrap();
        assert_eq!(
            pairwise_bonferroni(&[a, a2], Grouping::Condition),
            Err(StatsError::TooFewConditions(1))
        );
    }

    #[test]
    fn scores_ingest_and_pair() {
        let mut text = String::from("condition,id,score\n");
        for i in 1..=25 {
            text += &format!("Natural,MZ001-{i},{}\n", 3.5 + f64::from(i % 5) * 0.1);
            if i != 7 {
                text += &format!("VITS,MZ001-{i},{}\n", 3.4 + f64::from(i % 4) * 0.1);
            }
        }
        text += "VITS,MZ002-1,3.0\n";
        let table = ingest_scores(&text).unwrap();
        let p = table.paired("Natural", "VITS").unwrap();
        assert_eq!(p.x.len(), 24);
        assert_eq!(p.unpaired, vec![id("MZ001-7"), id("MZ002-1")]);
        let back = ingest_scores(&table.to_csv()).unwrap();
        assert_eq!(back, table);
        let rows = table.pairwise_t_tests().unwrap();
        assert_eq!(rows[0].p, rows[0].p_adjusted);
    }

    #[test]
    fn scores_errors() {
        let dup = "condition,id,score\nA,MZ001-1,3\nA,MZ001-1,4\n";
        assert!(matches!(
            ingest_scores(dup),
            Err(StatsError::Row { line: 3, .. })
        ));
        let nan = "condition,id,score\nA,MZ001-1,abc\n";
        assert!(matches!(
            ingest_scores(nan),
            Err(StatsError::Row { line: 2, .. })
        ));
        assert!(matches!(
            ingest_scores("cond,id\n"),
            Err(StatsError::Row { line: 1, .. })
        ));
    }

    #[test]
    fn equal_score_vectors_are_degenerate() {
        let text = "condition,id,score\nA,MZ001-1,3\nA,MZ001-2,4\nB,MZ001-1,3\nB,MZ001-2,4\n";
        let rows = ingest_scores(text).unwrap().pairwise_t_tests().unwrap();
        assert_eq!(rows[0].t, None);
    }
}
