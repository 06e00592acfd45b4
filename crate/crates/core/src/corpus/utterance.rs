use std::cmp::Ordering;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::textgrid::TextGridDoc;
use crate::scalar::{seconds_to_samples, Scalar};
use crate::signal::AudioBuffer;

const LANGUAGE_PREFIX: &str = "MZ";
/// Slack allowed when an interval ends past the end of the audio.
const EXTENT_TOLERANCE_S: f64 = 0.010;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum UtteranceIdError {
    #[error("`{0}`: missing \"MZ\" prefix")]
    MissingPrefix(String),
    #[error("`{0}`: missing hyphen between paragraph and sentence")]
    MissingHyphen(String),
    #[error("`{0}`: empty paragraph field")]
    EmptyParagraph(String),
    #[error("`{0}`: empty sentence field")]
    EmptySentence(String),
    #[error("`{0}`: non-digit characters in {1} field")]
    NonDigit(String, &'static str),
    #[error("`{0}`: {1} number must be positive")]
    Zero(String, &'static str),
}

/// Sentence identifier `MZ<paragraph>-<sentence>`; the raw spelling is kept
/// because zero padding varies between recordings.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct UtteranceId {
    raw: String,
    paragraph: u32,
    sentence: u32,
}

impl UtteranceId {
    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn paragraph(&self) -> u32 {
        self.paragraph
    }

    pub fn sentence(&self) -> u32 {
        self.sentence
    }

    /// Ordering by (paragraph, sentence), then spelling.
    pub fn numeric_cmp(&self, other: &Self) -> Ordering {
        (self.paragraph, self.sentence, &self.raw).cmp(&(
            other.paragraph,
            other.sentence,
            &other.raw,
        ))
    }
}

pub fn parse_utterance_id(raw: &str) -> Result<UtteranceId, UtteranceIdError> {
    let own = || raw.to_string();
    let body = raw
        .strip_prefix(LANGUAGE_PREFIX)
        .ok_or_else(|| UtteranceIdError::MissingPrefix(own()))?;
    let (para, sent) = body
        .split_once('-')
        .ok_or_else(|| UtteranceIdError::MissingHyphen(own()))?;
    let field = |s: &str, name: &'static str| -> Result<u32, UtteranceIdError> {
        if s.is_empty() {
            return Err(if name == "paragraph" {
                UtteranceIdError::EmptyParagraph(own())
            } else {
                UtteranceIdError::EmptySentence(own())
            });
        }
        if !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(UtteranceIdError::NonDigit(own(), name));
        }
        match s.parse::<u32>() {
            Ok(0) => Err(UtteranceIdError::Zero(own(), name)),
            Ok(v) => Ok(v),
            Err(_) => Err(UtteranceIdError::NonDigit(own(), name)),
        }
    };
    Ok(UtteranceId {
        raw: own(),
        paragraph: field(para, "paragraph")?,
        sentence: field(sent, "sentence")?,
    })
}

impl FromStr for UtteranceId {
    type Err = UtteranceIdError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_utterance_id(s)
    }
}

impl TryFrom<String> for UtteranceId {
    type Error = UtteranceIdError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        parse_utterance_id(&s)
    }
}

impl From<UtteranceId> for String {
    fn from(id: UtteranceId) -> Self {
        id.raw
    }
}

impl fmt::Display for UtteranceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

impl PartialOrd for UtteranceId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for UtteranceId {
    fn cmp(&self, other: &Self) -> Ordering {
        self.numeric_cmp(other)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub id: UtteranceId,
    pub text: String,
    pub audio_path: PathBuf,
    /// Seconds.
    pub duration: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum ExtractError {
    #[error("no interval tier named `{0}`")]
    MissingTier(String),
    #[error("interval {index} ({xmin}-{xmax} s) exceeds the audio extent of {audio_s} s")]
    BeyondAudio {
        index: usize,
        xmin: f64,
        xmax: f64,
        audio_s: f64,
    },
    #[error("interval {index}: {source}")]
    BadId {
        index: usize,
        source: UtteranceIdError,
    },
    #[error("interval {index} is empty after slicing")]
    EmptySlice { index: usize },
}

/// Slices `audio` into one utterance per non-empty interval of `tier_name`.
///
/// A label whose first whitespace-separated token is an utterance id takes that
/// id and the remainder as its text. Other labels are numbered in order of
/// appearance as `<paragraph_stem>-<n>` (1-based over non-empty intervals).
/// `audio_path` is set to `<raw_id>.wav`; callers relocate it as needed.
pub fn extract_utterances<T: Scalar>(
    doc: &TextGridDoc,
    audio: &AudioBuffer<T>,
    tier_name: &str,
    paragraph_stem: &str,
) -> Result<Vec<(Utterance, AudioBuffer<T>)>, ExtractError> {
    let tier = doc
        .tier(tier_name)
        .ok_or_else(|| ExtractError::MissingTier(tier_name.to_string()))?;
    let sr = audio.sample_rate;
    let n = audio.samples.len();
    let audio_s = audio.duration();
    let slack = seconds_to_samples(EXTENT_TOLERANCE_S, sr);
    let mut out = Vec::new();
    let mut ordinal = 0u32;
    for (index, iv) in tier.intervals.iter().enumerate() {
        let label = iv.label.trim();
        if label.is_empty() {
            continue;
        }
        ordinal += 1;
        let start = seconds_to_samples(iv.xmin, sr);
        let mut end = seconds_to_samples(iv.xmax, sr);
        if end > n {
            if end - n > slack {
                return Err(ExtractError::BeyondAudio {
                    index,
                    xmin: iv.xmin,
                    xmax: iv.xmax,
                    audio_s,
                });
            }
            end = n;
        }
        if start >= end {
            return Err(ExtractError::EmptySlice { index });
        }
        let (first, rest) = label.split_once(char::is_whitespace).unwrap_or((label, ""));
        let (id, text) = match parse_utterance_id(first) {
            Ok(id) => (id, rest.trim().to_string()),
            Err(_) => {
                let raw = format!("{paragraph_stem}-{ordinal}");
                let id = parse_utterance_id(&raw)
                    .map_err(|source| ExtractError::BadId { index, source })?;
                (id, label.to_string())
            }
        };
        let slice = AudioBuffer::new(audio.samples[start..end].to_vec(), sr);
        let utt = Utterance {
            audio_path: PathBuf::from(format!("{}.wav", id.raw())),
            id,
            text,
            duration: slice.duration(),
        };
        out.push((utt, slice));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::textgrid::{Interval, IntervalTier};

    #[test]
    fn ids_from_the_evaluation_set() {
        let a = parse_utterance_id("MZ000113-13").unwrap();
        assert_eq!((a.paragraph(), a.sentence()), (113, 13));
        assert_eq!(a.raw(), "MZ000113-13");
        let b = parse_utterance_id("MZ00051-7").unwrap();
        assert_eq!((b.paragraph(), b.sentence()), (51, 7));
        assert!(b < a);
    }

    #[test]
    fn id_errors() {
        assert_eq!(
            parse_utterance_id("MZ-13"),
            Err(UtteranceIdError::EmptyParagraph("MZ-13".into()))
        );
        assert!(matches!(
            parse_utterance_id("XY0001-1"),
            Err(UtteranceIdError::MissingPrefix(_))
        ));
        assert!(matches!(
            parse_utterance_id("MZ0001"),
            Err(UtteranceIdError::MissingHyphen(_))
        ));
        assert!(matches!(
            parse_utterance_id("MZ00a1-1"),
            Err(UtteranceIdError::NonDigit(_, "paragraph"))
        ));
        assert!(matches!(
            parse_utterance_id("MZ0001-x"),
            Err(UtteranceIdError::NonDigit(_, "sentence"))
        ));
        assert!(matches!(
            parse_utterance_id("MZ0001-"),
            Err(UtteranceIdError::EmptySentence(_))
        ));
        assert!(matches!(
            parse_utterance_id("MZ+1-1"),
            Err(UtteranceIdError::NonDigit(..))
        ));
    }

    fn doc(bounds: &[(f64, f64, &str)]) -> TextGridDoc {
        let xmax = bounds.last().map_or(0.0, |b| b.1);
        TextGridDoc {
            xmin: 0.0,
            xmax,
            tiers: vec![IntervalTier {
                name: "sentences".into(),
                xmin: 0.0,
                xmax,
                intervals: bounds
                    .iter()
                    .map(|&(a, b, l)| Interval {
                        xmin: a,
                        xmax: b,
                        label: l.into(),
                    })
                    .collect(),
            }],
        }
    }

    #[test]
    fn empty_labels_dropped() {
        let d = doc(&[(0.0, 1.0, "s1"), (1.0, 1.5, ""), (1.5, 2.0, "s2")]);
        let audio = AudioBuffer::new(vec![0.0f32; 44100], 22050);
        let utts = extract_utterances(&d, &audio, "sentences", "MZ00042").unwrap();
        assert_eq!(utts.len(), 2);
        assert_eq!(utts[0].0.id.raw(), "MZ00042-1");
        assert_eq!(utts[1].0.id.raw(), "MZ00042-2");
        assert_eq!(utts[1].0.text, "s2");
        assert_eq!(utts[0].0.audio_path, PathBuf::from("MZ00042-1.wav"));
    }

    #[test]
    fn one_second_is_22050_samples() {
        let d = doc(&[(0.0, 1.0, "MZ0007-3 ka lo kal")]);
        let audio = AudioBuffer::new(vec![0.0f64; 30000], 22050);
        let utts = extract_utterances(&d, &audio, "sentences", "MZ0007").unwrap();
        assert_eq!(utts[0].1.samples.len(), 22050);
        assert_eq!(utts[0].0.duration, 1.0);
        assert_eq!(utts[0].0.id.raw(), "MZ0007-3");
        assert_eq!(utts[0].0.text, "ka lo kal");
    }

    #[test]
    fn interval_past_audio_end() {
        let d = doc(&[(0.0, 1.5, "x")]);
        let audio = AudioBuffer::new(vec![0.0f64; 22050], 22050);
        assert!(matches!(
            extract_utterances(&d, &audio, "sentences", "MZ1"),
            Err(ExtractError::BeyondAudio { index: 0, .. })
        ));
        // within the 10 ms tolerance the slice is clamped
        let near = doc(&[(0.0, 1.005, "x")]);
        let utts = extract_utterances(&near, &audio, "sentences", "MZ1").unwrap();
        assert_eq!(utts[0].1.samples.len(), 22050);
        assert!(matches!(
            extract_utterances(&d, &audio, "words", "MZ1"),
            Err(ExtractError::MissingTier(_))
        ));
    }

    #[test]
    fn slice_lengths_conserved() {
        let bounds = [
            (0.0, 0.3333, "a"),
            (0.3333, 0.71, ""),
            (0.71, 1.23456, "b"),
            (1.23456, 2.0, "c"),
        ];
        let d = doc(&bounds);
        let audio = AudioBuffer::new(vec![0.0f64; 44100], 22050);
        let utts = extract_utterances(&d, &audio, "sentences", "MZ5").unwrap();
        let total: usize = utts.iter().map(|u| u.1.samples.len()).sum();
        let expected: f64 = bounds
            .iter()
            .filter(|b| !b.2.is_empty())
            .map(|b| (b.1 - b.0) * 22050.0)
            .sum();
        assert!((total as f64 - expected).abs() <= 3.0);
    }
}
