//! TextGrid annotations, sentence-level segmentation and corpus statistics.

mod stats;
mod textgrid;
mod utterance;

pub use stats::{compute_stats, word_histogram, words, CorpusStats, StatsError};
pub use textgrid::{
    decode_textgrid_bytes, parse_textgrid, serialize_textgrid, Interval, IntervalTier,
    ParsedTextGrid, TextGridDoc, TextGridError,
};
pub use utterance::{
    extract_utterances, parse_utterance_id, ExtractError, Utterance, UtteranceId, UtteranceIdError,
};
