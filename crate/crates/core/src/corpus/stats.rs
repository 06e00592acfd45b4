use std::collections::HashSet;

use serde::Serialize;
use thiserror::Error;

use super::utterance::Utterance;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("no utterances")]
    Empty,
    #[error("histogram bin width must be at least 1")]
    ZeroBinWidth,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub n_sentences: usize,
    pub n_words: usize,
    pub n_unique_words: usize,
    pub min_words: usize,
    pub max_words: usize,
    pub avg_words_per_sentence: f64,
    /// Hours.
    pub total_duration: f64,
    /// Seconds.
    pub avg_duration: f64,
}

/// Whitespace-separated tokens with leading and trailing punctuation removed.
/// Tokens that are all punctuation are dropped.
pub fn words(text: &str) -> impl Iterator<Item = &str> {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| c.is_ascii_punctuation() || is_unicode_punct(c)))
        .filter(|t| !t.is_empty())
}

fn is_unicode_punct(c: char) -> bool {
    matches!(
        c,
        '\u{2018}'..='\u{201F}' | '\u{2026}' | '\u{00AB}' | '\u{00BB}' | '\u{2013}' | '\u{2014}'
    )
}

pub fn compute_stats(utterances: &[Utterance]) -> Result<CorpusStats, StatsError> {
    if utterances.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut unique = HashSet::new();
    let mut n_words = 0;
    let mut min_words = usize::MAX;
    let mut max_words = 0;
    let mut seconds = 0.0;
    for u in utterances {
        let mut count = 0;
        for w in words(&u.text) {
            unique.insert(w.to_lowercase());
            count += 1;
        }
        n_words += count;
        min_words = min_words.min(count);
        max_words = max_words.max(count);
        seconds += u.duration;
    }
    let n = utterances.len();
    Ok(CorpusStats {
        n_sentences: n,
        n_words,
        n_unique_words: unique.len(),
        min_words,
        max_words,
        avg_words_per_sentence: n_words as f64 / n as f64,
        total_duration: seconds / 3600.0,
        avg_duration: seconds / n as f64,
    })
}

/// Sentence counts per word-count bin. Bins start at the minimum word count and
/// are contiguous up to the maximum, so empty bins are included.
pub fn word_histogram(
    utterances: &[Utterance],
    bin_width: usize,
) -> Result<Vec<(usize, usize)>, StatsError> {
    if bin_width == 0 {
        return Err(StatsError::ZeroBinWidth);
    }
    let counts: Vec<usize> = utterances.iter().map(|u| words(&u.text).count()).collect();
    let lo = *counts.iter().min().ok_or(StatsError::Empty)?;
    let hi = *counts.iter().max().ok_or(StatsError::Empty)?;
    let n_bins = (hi - lo) / bin_width + 1;
    let mut bins: Vec<(usize, usize)> = (0..n_bins).map(|b| (lo + b * bin_width, 0)).collect();
    for c in counts {
        bins[(c - lo) / bin_width].1 += 1;
    }
    Ok(bins)
}
