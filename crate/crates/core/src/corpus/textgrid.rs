//! Praat TextGrid documents in the long ("verbose") text encoding.
//!
//! Only interval tiers are retained. Point tiers (`TextTier`) are parsed for
//! well-formedness and then dropped, with one warning per skipped tier.
//!
//! String literals follow Praat's quoting rule: a literal is delimited by `"`
//! and an embedded quote is written as `""`. Literals may span lines.

use std::fmt::Write as _;

use thiserror::Error;

/// Tolerance used when checking that adjacent interval boundaries coincide.
const BOUNDARY_EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum TextGridError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("non-contiguous intervals at line {line}")]
    NonContiguous { line: usize },
    #[error("line {line}: non-monotonic times ({detail})")]
    NonMonotonic { line: usize, detail: String },
    #[error("line {line}: unexpected end of file (truncated TextGrid)")]
    Truncated { line: usize },
    #[error("unsupported TextGrid encoding: {0}")]
    Unsupported(String),
    #[error("invalid text encoding: {0}")]
    Encoding(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Interval {
    pub xmin: f64,
    pub xmax: f64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalTier {
    pub name: String,
    pub xmin: f64,
    pub xmax: f64,
    pub intervals: Vec<Interval>,
}

impl IntervalTier {
    /// Checks contiguity and ordering. Returns the index of the first offending
    /// interval on failure.
    pub fn validate(&self) -> Result<(), usize> {
        for (i, iv) in self.intervals.iter().enumerate() {
            if iv.xmin > iv.xmax
                || iv.xmin < self.xmin - BOUNDARY_EPS
                || iv.xmax > self.xmax + BOUNDARY_EPS
            {
                return Err(i);
            }
            if i > 0 && (self.intervals[i - 1].xmax - iv.xmin).abs() > BOUNDARY_EPS {
                return Err(i);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TextGridDoc {
    pub xmin: f64,
    pub xmax: f64,
    pub tiers: Vec<IntervalTier>,
}

impl TextGridDoc {
    pub fn tier(&self, name: &str) -> Option<&IntervalTier> {
        self.tiers.iter().find(|t| t.name == name)
    }
}

/// Result of parsing: the document plus any non-fatal warnings.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTextGrid {
    pub doc: TextGridDoc,
    pub warnings: Vec<String>,
}

/// Decodes raw file bytes: UTF-8 (optional BOM) or UTF-16 LE/BE with BOM.
pub fn decode_textgrid_bytes(bytes: &[u8]) -> Result<String, TextGridError> {
    let utf16 = |be: bool| -> Result<String, TextGridError> {
        let body = &bytes[2..];
        if !body.len().is_multiple_of(2) {
            return Err(TextGridError::Encoding(
                "odd byte count in UTF-16 data".into(),
            ));
        }
        let units = body.chunks_exact(2).map(|c| {
            if be {
                u16::from_be_bytes([c[0], c[1]])
            } else {
                u16::from_le_bytes([c[0], c[1]])
            }
        });
        char::decode_utf16(units)
            .collect::<Result<String, _>>()
            .map_err(|e| TextGridError::Encoding(e.to_string()))
    };
    match bytes {
        [0xFF, 0xFE, ..] => utf16(false),
        [0xFE, 0xFF, ..] => utf16(true),
        [0xEF, 0xBB, 0xBF, rest @ ..] => {
            String::from_utf8(rest.to_vec()).map_err(|e| TextGridError::Encoding(e.to_string()))
        }
        _ => String::from_utf8(bytes.to_vec()).map_err(|e| TextGridError::Encoding(e.to_string())),
    }
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str) -> Self {
        let src = src.strip_prefix('\u{feff}').unwrap_or(src);
        Cursor {
            src,
            pos: 0,
            line: 1,
        }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn bump(&mut self, n: usize) {
        self.line += self.src[self.pos..self.pos + n].matches('\n').count();
        self.pos += n;
    }

    fn skip_ws(&mut self) {
        let n = self.rest().len() - self.rest().trim_start().len();
        self.bump(n);
    }

    fn at_eof(&mut self) -> bool {
        self.skip_ws();
        self.rest().is_empty()
    }

    fn malformed(&self, message: impl Into<String>) -> TextGridError {
        TextGridError::Malformed {
            line: self.line,
            message: message.into(),
        }
    }

    fn eof_or(&self, message: impl Into<String>) -> TextGridError {
        if self.rest().trim().is_empty() {
            TextGridError::Truncated { line: self.line }
        } else {
            self.malformed(message)
        }
    }

    fn peek_is(&mut self, lit: &str) -> bool {
        self.skip_ws();
        self.rest().starts_with(lit)
    }

    fn expect(&mut self, lit: &str) -> Result<(), TextGridError> {
        self.skip_ws();
        if self.rest().starts_with(lit) {
            self.bump(lit.len());
            Ok(())
        } else {
            Err(self.eof_or(format!("expected `{lit}`")))
        }
    }

    fn word(&mut self) -> Result<&'a str, TextGridError> {
        self.skip_ws();
        let rest = self.rest();
        let n = rest.find(char::is_whitespace).unwrap_or(rest.len());
        if n == 0 {
            return Err(TextGridError::Truncated { line: self.line });
        }
        self.bump(n);
        Ok(&rest[..n])
    }

    fn number(&mut self) -> Result<f64, TextGridError> {
        let w = self.word()?;
        w.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| TextGridError::Malformed {
                line: self.line,
                message: format!("invalid number `{w}`"),
            })
    }

    fn count(&mut self) -> Result<usize, TextGridError> {
        let w = self.word()?;
        w.parse::<usize>().map_err(|_| TextGridError::Malformed {
            line: self.line,
            message: format!("invalid count `{w}`"),
        })
    }

    fn string(&mut self) -> Result<String, TextGridError> {
        self.skip_ws();
        if !self.rest().starts_with('"') {
            return Err(self.eof_or("expected string literal"));
        }
        let start_line = self.line;
        let body = &self.rest()[1..];
        let mut out = String::new();
        let mut chars = body.char_indices().peekable();
        while let Some((i, c)) = chars.next() {
            if c == '"' {
                if let Some(&(_, '"')) = chars.peek() {
                    chars.next();
                    out.push('"');
                    continue;
                }
                self.bump(1 + i + 1);
                return Ok(out);
            }
            out.push(c);
        }
        Err(TextGridError::Truncated { line: start_line })
    }

    fn key_number(&mut self, key: &str) -> Result<(f64, usize), TextGridError> {
        self.expect(key)?;
        self.expect("=")?;
        let line = self.line;
        Ok((self.number()?, line))
    }

    fn key_string(&mut self, key: &str) -> Result<String, TextGridError> {
        self.expect(key)?;
        self.expect("=")?;
        self.string()
    }

    fn key_count(&mut self, key: &str) -> Result<usize, TextGridError> {
        self.expect(key)?;
        self.expect("=")?;
        self.count()
    }

    fn item_header(&mut self, kind: &str, index: usize) -> Result<(), TextGridError> {
        self.expect(kind)?;
        self.expect("[")?;
        let line = self.line;
        let n = self.count_until(']')?;
        if n != index {
            return Err(TextGridError::Malformed {
                line,
                message: format!("expected {kind} [{index}], found [{n}]"),
            });
        }
        self.expect("]:")
    }

    fn count_until(&mut self, end: char) -> Result<usize, TextGridError> {
        self.skip_ws();
        let rest = self.rest();
        let n = rest
            .find(end)
            .ok_or(TextGridError::Truncated { line: self.line })?;
        let digits = rest[..n].trim();
        let v = digits
            .parse::<usize>()
            .map_err(|_| self.malformed(format!("invalid index `{digits}`")))?;
        self.bump(n);
        Ok(v)
    }
}

/// Parses a long-form TextGrid.
pub fn parse_textgrid(content: &str) -> Result<ParsedTextGrid, TextGridError> {
    let mut cur = Cursor::new(content);
    let file_type = cur.key_string("File type").map_err(|e| match e {
        TextGridError::Truncated { .. } | TextGridError::Malformed { .. } => {
            TextGridError::Malformed {
                line: 1,
                message: "missing `File type` header".into(),
            }
        }
        other => other,
    })?;
    match file_type.as_str() {
        "ooTextFile" => {}
        "ooBinaryFile" => return Err(TextGridError::Unsupported("binary TextGrid".into())),
        other => return Err(cur.malformed(format!("unknown file type `{other}`"))),
    }
    let class = cur.key_string("Object class")?;
    if class != "TextGrid" {
        return Err(cur.malformed(format!("object class `{class}` is not TextGrid")));
    }
    if !cur.peek_is("xmin") {
        if cur.at_eof() {
            return Err(TextGridError::Truncated { line: cur.line });
        }
        return Err(TextGridError::Unsupported(
            "short-form TextGrid; only the long text form is supported".into(),
        ));
    }
    let (xmin, _) = cur.key_number("xmin")?;
    let (xmax, xmax_line) = cur.key_number("xmax")?;
    if xmin > xmax {
        return Err(TextGridError::NonMonotonic {
            line: xmax_line,
            detail: format!("xmin {xmin} > xmax {xmax}"),
        });
    }
    cur.expect("tiers?")?;
    let exists = cur.word()?;
    let n_items = if exists == "<exists>" {
        let n = cur.key_count("size")?;
        cur.expect("item")?;
        cur.expect("[]:")?;
        n
    } else if exists == "<absent>" {
        0
    } else {
        return Err(cur.malformed(format!("unexpected tier flag `{exists}`")));
    };

    let mut tiers = Vec::with_capacity(n_items);
    let mut warnings = Vec::new();
    for idx in 1..=n_items {
        cur.item_header("item", idx)?;
        let class = cur.key_string("class")?;
        let name = cur.key_string("name")?;
        let (t_xmin, _) = cur.key_number("xmin")?;
        let (t_xmax, t_line) = cur.key_number("xmax")?;
        if t_xmin > t_xmax {
            return Err(TextGridError::NonMonotonic {
                line: t_line,
                detail: format!("tier `{name}` xmin > xmax"),
            });
        }
        if t_xmin < xmin - BOUNDARY_EPS || t_xmax > xmax + BOUNDARY_EPS {
            return Err(TextGridError::NonMonotonic {
                line: t_line,
                detail: format!("tier `{name}` extends outside the document"),
            });
        }
        match class.as_str() {
            "IntervalTier" => {
                cur.expect("intervals:")?;
                let n = cur.key_count("size")?;
                let mut intervals: Vec<Interval> = Vec::with_capacity(n);
                for j in 1..=n {
                    cur.item_header("intervals", j)?;
                    let (a, a_line) = cur.key_number("xmin")?;
                    let (b, b_line) = cur.key_number("xmax")?;
                    let label = cur.key_string("text")?;
                    if a > b {
                        return Err(TextGridError::NonMonotonic {
                            line: b_line,
                            detail: format!("interval {j} xmin {a} > xmax {b}"),
                        });
                    }
                    if a < t_xmin - BOUNDARY_EPS || b > t_xmax + BOUNDARY_EPS {
                        return Err(TextGridError::NonMonotonic {
                            line: b_line,
                            detail: format!("interval {j} outside tier `{name}`"),
                        });
                    }
                    if let Some(prev) = intervals.last() {
                        if (prev.xmax - a).abs() > BOUNDARY_EPS {
                            return Err(TextGridError::NonContiguous { line: a_line });
                        }
                    }
                    intervals.push(Interval {
                        xmin: a,
                        xmax: b,
                        label,
                    });
                }
                tiers.push(IntervalTier {
                    name,
                    xmin: t_xmin,
                    xmax: t_xmax,
                    intervals,
                });
            }
            "TextTier" => {
                cur.expect("points:")?;
                let n = cur.key_count("size")?;
                for j in 1..=n {
                    cur.item_header("points", j)?;
                    if cur.peek_is("number") {
                        cur.key_number("number")?;
                    } else {
                        cur.key_number("time")?;
                    }
                    cur.key_string("mark")?;
                }
                warnings.push(format!("skipped point tier `{name}` ({n} points)"));
            }
            other => return Err(cur.malformed(format!("unknown tier class `{other}`"))),
        }
    }
    if !cur.at_eof() {
        return Err(cur.malformed("trailing content after last tier"));
    }
    for w in &warnings {
        tracing::warn!("{w}");
    }
    Ok(ParsedTextGrid {
        doc: TextGridDoc { xmin, xmax, tiers },
        warnings,
    })
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

/// Writes the long text form. Times use the shortest representation that
/// parses back to the identical `f64`.
pub fn serialize_textgrid(doc: &TextGridDoc) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "File type = \"ooTextFile\"");
    let _ = writeln!(out, "Object class = \"TextGrid\"");
    let _ = writeln!(out);
    let _ = writeln!(out, "xmin = {} ", doc.xmin);
    let _ = writeln!(out, "xmax = {} ", doc.xmax);
    if doc.tiers.is_empty() {
        let _ = writeln!(out, "tiers? <absent> ");
        return out;
    }
    let _ = writeln!(out, "tiers? <exists> ");
    let _ = writeln!(out, "size = {} ", doc.tiers.len());
    let _ = writeln!(out, "item []: ");
    for (i, tier) in doc.tiers.iter().enumerate() {
        let _ = writeln!(out, "    item [{}]:", i + 1);
        let _ = writeln!(out, "        class = \"IntervalTier\" ");
        let _ = writeln!(out, "        name = {} ", quote(&tier.name));
        let _ = writeln!(out, "        xmin = {} ", tier.xmin);
        let _ = writeln!(out, "        xmax = {} ", tier.xmax);
        let _ = writeln!(out, "        intervals: size = {} ", tier.intervals.len());
        for (j, iv) in tier.intervals.iter().enumerate() {
            let _ = writeln!(out, "        intervals [{}]:", j + 1);
            let _ = writeln!(out, "            xmin = {} ", iv.xmin);
            let _ = writeln!(out, "            xmax = {} ", iv.xmax);
            let _ = writeln!(out, "            text = {} ", quote(&iv.label));
        }
    }
    out
}
