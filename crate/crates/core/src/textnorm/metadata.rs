use thiserror::Error;

use super::{normalize, NormError, NormLexicon};
use crate::corpus::{Utterance, UtteranceId};

pub const METADATA_HEADER: [&str; 4] = ["id", "text", "audio_path", "duration_s"];

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MetadataError {
    #[error("{id}: audio file {path} not found")]
    MissingAudio { id: UtteranceId, path: String },
    #[error("{id}: {source}")]
    Normalization { id: UtteranceId, source: NormError },
    #[error("{id}: transcript is empty after normalization")]
    EmptyText { id: UtteranceId },
}

/// CSV text plus the per-row problems that kept rows out of it.
#[derive(Debug, Clone, PartialEq)]
pub struct MetadataOutput {
    pub csv: String,
    pub errors: Vec<MetadataError>,
}

impl MetadataOutput {
    pub fn is_clean(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Training metadata rows ordered by (paragraph, sentence), with normalized
/// transcripts. Rows whose audio is missing or whose text fails to normalize
/// are reported in `errors` and left out.
pub fn build_metadata(utterances: &[Utterance], lexicon: &NormLexicon) -> MetadataOutput {
    let mut sorted: Vec<&Utterance> = utterances.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    writer
        .write_record(METADATA_HEADER)
        .expect("in-memory write");
    let mut errors = Vec::new();
    for u in sorted {
        if !u.audio_path.is_file() {
            errors.push(MetadataError::MissingAudio {
                id: u.id.clone(),
                path: u.audio_path.display().to_string(),
            });
            continue;
        }
        let text = match normalize(&u.text, lexicon) {
            Ok(r) if r.output.is_empty() => {
                errors.push(MetadataError::EmptyText { id: u.id.clone() });
                continue;
            }
            Ok(r) => r.output,
            Err(source) => {
                errors.push(MetadataError::Normalization {
                    id: u.id.clone(),
                    source,
                });
                continue;
            }
        };
        let path = u.audio_path.display().to_string();
        writer
            .write_record([u.id.raw(), &text, &path, &u.duration.to_string()])
            .expect("in-memory write");
    }
    let csv =
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 input");
    MetadataOutput { csv, errors }
}
