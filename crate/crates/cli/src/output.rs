use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::Format;

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

pub fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// Writes `<stem>.csv` or `<stem>.json` depending on `format`.
pub fn emit<T: Serialize + ?Sized>(
    dir: &Path,
    stem: &str,
    format: Format,
    csv: &str,
    value: &T,
) -> Result<PathBuf> {
    let path = match format {
        Format::Csv => {
            let p = dir.join(format!("{stem}.csv"));
            write(&p, csv)?;
            p
        }
        Format::Json => {
            let p = dir.join(format!("{stem}.json"));
            let mut text = serde_json::to_string_pretty(value)?;
            text.push('\n');
            write(&p, text)?;
            p
        }
    };
    Ok(path)
}

pub fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

pub fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

/// Sorted regular files in `dir` whose extension matches (case-insensitive).
pub fn files_with_ext(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e.eq_ignore_ascii_case(ext)))
        .collect();
    out.sort();
    Ok(out)
}
