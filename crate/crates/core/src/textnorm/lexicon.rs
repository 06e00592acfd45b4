use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LexiconError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: duplicate key `{key}` in [{table}]")]
    Duplicate {
        line: usize,
        table: &'static str,
        key: String,
    },
    #[error("invalid lexicon: {0}")]
    Invalid(String),
    #[error("cannot read lexicon {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombineOrder {
    HighFirst,
    LowFirst,
}

/// Place-value numeral composition rules.
#[derive(Debug, Clone, PartialEq)]
pub struct NumeralRules {
    pub exact: BTreeMap<u64, String>,
    pub unit: BTreeMap<u64, String>,
    /// Place templates keyed by place value.
    pub places: BTreeMap<u64, String>,
    pub join: String,
    pub order: CombineOrder,
    pub max: u64,
}

impl NumeralRules {
    /// Word sequence for `n`, or `None` when `n` exceeds [`NumeralRules::max`].
    pub fn expand(&self, n: u64) -> Option<String> {
        if n > self.max {
            return None;
        }
        Some(self.compose(n))
    }

    fn compose(&self, n: u64) -> String {
        if let Some(w) = self.exact.get(&n) {
            return w.clone();
        }
        let (&place, template) = self
            .places
            .range(..=n)
            .next_back()
            .expect("validated lexicon has places below any non-digit value");
        let q = n / place;
        let r = n % place;
        let head = match self.exact.get(&(q * place)) {
            Some(w) => w.clone(),
            None => template.replace("{m}", &self.multiplier(q)),
        };
        if r == 0 {
            return head;
        }
        let tail = self.compose(r);
        let (first, second) = match self.order {
            CombineOrder::HighFirst => (head, tail),
            CombineOrder::LowFirst => (tail, head),
        };
        if self.join.is_empty() {
            format!("{first} {second}")
        } else {
            format!("{first} {} {second}", self.join)
        }
    }

    fn multiplier(&self, q: u64) -> String {
        self.unit
            .get(&q)
            .cloned()
            .unwrap_or_else(|| self.compose(q))
    }
}

/// Normalization tables.
#[derive(Debug, Clone, PartialEq)]
pub struct NormLexicon {
    pub numerals: NumeralRules,
    /// Abbreviation token (literal, may end in a period) to expansion.
    pub abbreviations: BTreeMap<String, String>,
    /// Character to replacement; empty replacement deletes.
    pub chars: BTreeMap<char, String>,
}

fn decode_key(raw: &str, line: usize) -> Result<String, LexiconError> {
    if let Some(hex) = raw.strip_prefix("U+") {
        let cp = u32::from_str_radix(hex, 16)
            .ok()
            .and_then(char::from_u32)
            .ok_or_else(|| LexiconError::Syntax {
                line,
                message: format!("bad code point `{raw}`"),
            })?;
        return Ok(cp.to_string());
    }
    Ok(raw.to_string())
}

/// The Mizo tables shipped with the crate.
pub const BUILTIN_LEXICON: &str = include_str!("../../data/mizo.lexicon");

impl NormLexicon {
    pub fn builtin() -> Self {
        BUILTIN_LEXICON.parse().expect("shipped lexicon is valid")
    }

    pub fn from_path(path: &Path) -> Result<Self, LexiconError> {
        let text = std::fs::read_to_string(path).map_err(|e| LexiconError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        text.parse()
    }

    fn validate(&self) -> Result<(), LexiconError> {
        let bad = |m: String| Err(LexiconError::Invalid(m));
        for d in 0..=9 {
            if !self.numerals.exact.contains_key(&d) {
                return bad(format!("numeral rules must define digit {d}"));
            }
        }
        if let Some((&p, _)) = self.numerals.places.iter().find(|(&p, _)| p < 10) {
            return bad(format!("place value {p} must be at least 10"));
        }
        if self.numerals.max > 9 && self.numerals.places.keys().next() != Some(&10) {
            return bad("numeral max above 9 requires a place:10 template".into());
        }
        for (p, t) in &self.numerals.places {
            if !t.contains("{m}") {
                return bad(format!("place:{p} template lacks {{m}}"));
            }
        }
        let mapped: HashSet<char> = self.chars.keys().copied().collect();
        let outputs = self
            .numerals
            .exact
            .values()
            .chain(self.numerals.unit.values())
            .chain(self.numerals.places.values())
            .chain(self.abbreviations.values())
            .chain(self.chars.values())
            .chain(std::iter::once(&self.numerals.join));
        for out in outputs {
            if out
                .chars()
                .any(|c| c.is_ascii_digit() || mapped.contains(&c))
            {
                return bad(format!(
                    "replacement `{out}` contains a digit or a mapped character"
                ));
            }
        }
        let rule_outputs = self
            .numerals
            .exact
            .values()
            .chain(self.numerals.unit.values())
            .chain(self.abbreviations.values());
        if rule_outputs.clone().any(|o| o.trim().is_empty()) {
            return bad("numeral and abbreviation outputs must be non-empty".into());
        }
        if self
            .abbreviations
            .keys()
            .any(|k| k.is_empty() || k.chars().any(char::is_whitespace))
        {
            return bad("abbreviation keys must be single non-empty tokens".into());
        }
        Ok(())
    }
}

impl std::str::FromStr for NormLexicon {
    type Err = LexiconError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        #[derive(Clone, Copy, PartialEq)]
        enum Section {
            None,
            Numerals,
            Abbrev,
            Chars,
        }
        let mut section = Section::None;
        let mut numerals = NumeralRules {
            exact: BTreeMap::new(),
            unit: BTreeMap::new(),
            places: BTreeMap::new(),
            join: String::new(),
            order: CombineOrder::HighFirst,
            max: 0,
        };
        let mut explicit_max = None;
        let mut seen_numeral_keys = HashSet::new();
        let mut abbreviations = BTreeMap::new();
        let mut chars = BTreeMap::new();

        for (i, raw_line) in text.lines().enumerate() {
            let line = i + 1;
            let raw_line = raw_line.strip_suffix('\r').unwrap_or(raw_line);
            if raw_line.trim().is_empty() || raw_line.trim_start().starts_with('#') {
                continue;
            }
            let trimmed = raw_line.trim();
            if trimmed.starts_with('[') && trimmed.ends_with(']') {
                section = match &trimmed[1..trimmed.len() - 1] {
                    "numerals" => Section::Numerals,
                    "abbreviations" => Section::Abbrev,
                    "chars" => Section::Chars,
                    other => {
                        return Err(LexiconError::Syntax {
                            line,
                            message: format!("unknown section [{other}]"),
                        })
                    }
                };
                continue;
            }
            let syntax = |m: String| LexiconError::Syntax { line, message: m };
            let (key, value) = raw_line
                .split_once('\t')
                .ok_or_else(|| syntax("expected KEY<TAB>VALUE".to_string()))?;
            let key = decode_key(key, line)?;
            let value = value.trim().to_string();
            match section {
                Section::None => return Err(syntax("entry outside of a section".into())),
                Section::Numerals => {
                    if !seen_numeral_keys.insert(key.clone()) {
                        return Err(LexiconError::Duplicate {
                            line,
                            table: "numerals",
                            key,
                        });
                    }
                    let num = |s: &str| {
                        s.parse::<u64>()
                            .map_err(|_| syntax(format!("bad number `{s}`")))
                    };
                    if let Some(d) = key.strip_prefix("unit:") {
                        numerals.unit.insert(num(d)?, value);
                    } else if let Some(p) = key.strip_prefix("place:") {
                        numerals.places.insert(num(p)?, value);
                    } else if key == "join" {
                        numerals.join = value;
                    } else if key == "order" {
                        numerals.order = match value.as_str() {
                            "high-first" => CombineOrder::HighFirst,
                            "low-first" => CombineOrder::LowFirst,
                            other => return Err(syntax(format!("unknown order `{other}`"))),
                        };
                    } else if key == "max" {
                        explicit_max = Some(num(&value)?);
                    } else {
                        numerals.exact.insert(num(&key)?, value);
                    }
                }
                Section::Abbrev => {
                    if abbreviations.insert(key.clone(), value).is_some() {
                        return Err(LexiconError::Duplicate {
                            line,
                            table: "abbreviations",
                            key,
                        });
                    }
                }
                Section::Chars => {
                    let mut it = key.chars();
                    let c = match (it.next(), it.next()) {
                        (Some(c), None) => c,
                        _ => {
                            return Err(syntax(format!(
                                "[chars] key `{key}` must be a single character"
                            )))
                        }
                    };
                    if chars.insert(c, value).is_some() {
                        return Err(LexiconError::Duplicate {
                            line,
                            table: "chars",
                            key,
                        });
                    }
                }
            }
        }
        numerals.max = explicit_max.unwrap_or_else(|| match numerals.places.keys().next_back() {
            Some(&top) => top.saturating_mul(10) - 1,
            None => 9,
        });
        let lex = NormLexicon {
            numerals,
            abbreviations,
            chars,
        };
        lex.validate()?;
        Ok(lex)
    }
}
