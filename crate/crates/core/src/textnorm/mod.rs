//! Table-driven transcript normalization.
//!
//! Stages run in a fixed order: abbreviations, numerals, special characters.
//! Every stage returns a [`NormReport`] whose edits, replayed left to right on
//! the input, reproduce the output.

mod lexicon;
mod metadata;

use serde::Serialize;
use thiserror::Error;

pub use lexicon::{CombineOrder, LexiconError, NormLexicon, NumeralRules, BUILTIN_LEXICON};
pub use metadata::{build_metadata, MetadataError, MetadataOutput, METADATA_HEADER};

/// Upper bound on pipeline passes when iterating to a fixed point.
const MAX_PASSES: usize = 4;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum NormError {
    #[error(
        "numeral `{digits}` at bytes {start}..{end} exceeds the largest composable value {max}"
    )]
    NumeralOverflow {
        digits: String,
        start: usize,
        end: usize,
        max: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    Abbreviation,
    Numeral,
    Character,
    Whitespace,
}

/// One replacement. `start..end` is a byte span of the text as it stands after
/// all earlier edits in the same report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AppliedRule {
    pub kind: RuleKind,
    pub start: usize,
    pub end: usize,
    pub before: String,
    pub after: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NormReport {
    pub input: String,
    pub output: String,
    pub applied: Vec<AppliedRule>,
}

impl NormReport {
    /// Re-applies the recorded edits to `input`. Returns `None` if an edit does
    /// not match the text it claims to replace.
    pub fn replay(&self) -> Option<String> {
        let mut text = self.input.clone();
        for e in &self.applied {
            if text.get(e.start..e.end)? != e.before {
                return None;
            }
            text.replace_range(e.start..e.end, &e.after);
        }
        Some(text)
    }

    fn chain(mut self, next: NormReport) -> NormReport {
        debug_assert_eq!(self.output, next.input);
        self.output = next.output;
        self.applied.extend(next.applied);
        self
    }
}

/// Accumulates output and edits while scanning an input left to right.
struct Rewriter<'a> {
    input: &'a str,
    out: String,
    applied: Vec<AppliedRule>,
}

impl<'a> Rewriter<'a> {
    fn new(input: &'a str) -> Self {
        Rewriter {
            input,
            out: String::with_capacity(input.len()),
            applied: Vec::new(),
        }
    }

    fn keep(&mut self, s: &str) {
        self.out.push_str(s);
    }

    fn replace(&mut self, kind: RuleKind, before: &str, after: &str) {
        let start = self.out.len();
        self.applied.push(AppliedRule {
            kind,
            start,
            end: start + before.len(),
            before: before.to_string(),
            after: after.to_string(),
        });
        self.out.push_str(after);
    }

    fn finish(self) -> NormReport {
        NormReport {
            input: self.input.to_string(),
            output: self.out,
            applied: self.applied,
        }
    }
}

fn next_char(s: &str, at: usize) -> Option<char> {
    s[at..].chars().next()
}

fn prev_char(s: &str, at: usize) -> Option<char> {
    s[..at].chars().next_back()
}

/// Expands abbreviation tokens. A match must not be preceded by a letter and
/// must end the token (end of text, a non-alphanumeric next character, or a key
/// ending in punctuation). Longer keys win.
pub fn expand_abbreviations(text: &str, lexicon: &NormLexicon) -> NormReport {
    let mut keys: Vec<(&String, &String)> = lexicon.abbreviations.iter().collect();
    keys.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then(a.0.cmp(b.0)));
    let mut rw = Rewriter::new(text);
    let mut i = 0;
    while i < text.len() {
        let boundary_before = prev_char(text, i).is_none_or(|c| !c.is_alphabetic());
        let hit = boundary_before
            .then(|| {
                keys.iter().find(|(k, _)| {
                    text[i..].starts_with(k.as_str()) && {
                        let end = i + k.len();
                        let last_is_alnum =
                            k.chars().next_back().is_some_and(char::is_alphanumeric);
                        next_char(text, end).is_none_or(|c| !c.is_alphanumeric() || !last_is_alnum)
                    }
                })
            })
            .flatten();
        match hit {
            Some((k, v)) => {
                let end = i + k.len();
                let pad = next_char(text, end).is_some_and(char::is_alphanumeric);
                let after = if pad { format!("{v} ") } else { v.to_string() };
                rw.replace(RuleKind::Abbreviation, k, &after);
                i = end;
            }
            None => {
                let c = next_char(text, i).expect("in bounds");
                rw.keep(&text[i..i + c.len_utf8()]);
                i += c.len_utf8();
            }
        }
    }
    rw.finish()
}

/// Replaces every maximal run of ASCII digits by its word form.
pub fn expand_numerals(text: &str, lexicon: &NormLexicon) -> Result<NormReport, NormError> {
    let mut rw = Rewriter::new(text);
    let bytes = text.as_bytes();
    let mut i = 0;
    let mut plain_start = 0;
    while i < bytes.len() {
        if !bytes[i].is_ascii_digit() {
            i += 1;
            continue;
        }
        let start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        let digits = &text[start..i];
        let overflow = || NormError::NumeralOverflow {
            digits: digits.to_string(),
            start,
            end: i,
            max: lexicon.numerals.max,
        };
        let value = digits.parse::<u64>().map_err(|_| overflow())?;
        let words = lexicon.numerals.expand(value).ok_or_else(overflow)?;
        rw.keep(&text[plain_start..start]);
        let lead = prev_char(text, start).is_some_and(|c| !c.is_whitespace());
        let trail = next_char(text, i).is_some_and(|c| !c.is_whitespace());
        let after = format!(
            "{}{words}{}",
            if lead { " " } else { "" },
            if trail { " " } else { "" }
        );
        rw.replace(RuleKind::Numeral, digits, &after);
        plain_start = i;
    }
    rw.keep(&text[plain_start..]);
    Ok(rw.finish())
}

/// Maps or deletes listed characters, then collapses whitespace runs to a
/// single space and trims.
pub fn normalize_special_chars(text: &str, lexicon: &NormLexicon) -> NormReport {
    let mut rw = Rewriter::new(text);
    for (idx, c) in text.char_indices() {
        let s = &text[idx..idx + c.len_utf8()];
        match lexicon.chars.get(&c) {
            Some(rep) if rep.is_empty() => rw.replace(RuleKind::Character, s, ""),
            Some(rep) => rw.replace(RuleKind::Character, s, &format!(" {rep} ")),
            None => rw.keep(s),
        }
    }
    let mapped = rw.finish();
    collapse_whitespace(&mapped.output).map_or(mapped.clone(), |ws| mapped.chain(ws))
}

fn collapse_whitespace(text: &str) -> Option<NormReport> {
    let mut rw = Rewriter::new(text);
    let mut chars = text.char_indices().peekable();
    let mut changed = false;
    while let Some((i, c)) = chars.next() {
        if !c.is_whitespace() {
            rw.keep(&text[i..i + c.len_utf8()]);
            continue;
        }
        let mut end = i + c.len_utf8();
        while let Some(&(j, d)) = chars.peek() {
            if !d.is_whitespace() {
                break;
            }
            end = j + d.len_utf8();
            chars.next();
        }
        let run = &text[i..end];
        let edge = i == 0 || end == text.len();
        let target = if edge { "" } else { " " };
        if run != target {
            rw.replace(RuleKind::Whitespace, run, target);
            changed = true;
        } else {
            rw.keep(run);
        }
    }
    changed.then(|| rw.finish())
}

fn one_pass(text: &str, lexicon: &NormLexicon) -> Result<NormReport, NormError> {
    let a = expand_abbreviations(text, lexicon);
    let n = expand_numerals(&a.output, lexicon)?;
    let c = normalize_special_chars(&n.output, lexicon);
    Ok(a.chain(n).chain(c))
}

/// Full pipeline. Repeats until the text stops changing (character deletions
/// can expose new abbreviation tokens), so the result is idempotent.
pub fn normalize(text: &str, lexicon: &NormLexicon) -> Result<NormReport, NormError> {
    let mut report = one_pass(text, lexicon)?;
    for _ in 1..MAX_PASSES {
        let next = one_pass(&report.output, lexicon)?;
        if next.applied.is_empty() {
            break;
        }
        report = report.chain(next);
    }
    Ok(report)
}
