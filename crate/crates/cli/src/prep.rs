use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use rayon::prelude::*;
use serde::Serialize;
use tonaleval::corpus::{
    compute_stats, decode_textgrid_bytes, extract_utterances, parse_textgrid, word_histogram,
    CorpusStats, Utterance,
};
use tonaleval::signal::{read_wav, resample, write_wav};
use tonaleval::textnorm::{build_metadata, normalize, NormLexicon};

use crate::manifest::ManifestBuilder;
use crate::output::{csv_writer, emit, ensure_dir, files_with_ext, finish, write};
use crate::{svg, Globals, Report};

#[derive(Debug, Args)]
pub struct PrepArgs {
    /// Directory of `<stem>.TextGrid` files.
    #[arg(long)]
    textgrids: PathBuf,
    /// Directory of `<stem>.wav` recordings matching the TextGrid stems.
    #[arg(long)]
    wavs: PathBuf,
    /// Normalization tables; the built-in Mizo lexicon when omitted.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Interval tier holding one sentence per interval.
    #[arg(long, default_value = "sentences")]
    tier: String,
    #[arg(long, default_value_t = 22_050)]
    sample_rate: u32,
    /// Word-count bin width for the histogram.
    #[arg(long, default_value_t = 5)]
    bin_width: usize,
}

type Segmented = Result<Vec<(Utterance, Vec<u8>)>, String>;

fn segment(
    tg_path: &Path,
    wav_dir: &Path,
    args: &PrepArgs,
    warnings: &mut Vec<String>,
) -> Segmented {
    let stem = tg_path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| format!("{}: bad file name", tg_path.display()))?;
    let wav_path = wav_dir.join(format!("{stem}.wav"));
    if !wav_path.is_file() {
        return Err(format!(
            "{}: missing audio {}",
            tg_path.display(),
            wav_path.display()
        ));
    }
    let fail = |e: &dyn std::fmt::Display| format!("{}: {e}", tg_path.display());
    let bytes = std::fs::read(tg_path).map_err(|e| fail(&e))?;
    let text = decode_textgrid_bytes(&bytes).map_err(|e| fail(&e))?;
    let parsed = parse_textgrid(&text).map_err(|e| fail(&e))?;
    warnings.extend(
        parsed
            .warnings
            .iter()
            .map(|w| format!("{}: {w}", tg_path.display())),
    );
    let wav_bytes = std::fs::read(&wav_path).map_err(|e| fail(&e))?;
    let audio = read_wav::<f64>(&wav_bytes).map_err(|e| format!("{}: {e}", wav_path.display()))?;
    let pieces = extract_utterances(&parsed.doc, &audio, &args.tier, stem).map_err(|e| fail(&e))?;
    pieces
        .into_iter()
        .map(|(mut utt, slice)| {
            let slice = resample(&slice, args.sample_rate).map_err(|e| fail(&e))?;
            utt.duration = slice.duration();
            utt.audio_path = args.out.join("wavs").join(format!("{}.wav", utt.id.raw()));
            Ok((utt, write_wav(&slice)))
        })
        .collect()
}

#[derive(Serialize)]
struct HistogramBin {
    lower: usize,
    upper: usize,
    frequency: usize,
}

fn stats_csv(s: &CorpusStats) -> String {
    let mut w = csv_writer();
    w.write_record(["statistic", "value"])
        .expect("in-memory write");
    let rows = [
        ("n_sentences", s.n_sentences.to_string()),
        ("n_words", s.n_words.to_string()),
        ("n_unique_words", s.n_unique_words.to_string()),
        ("min_words", s.min_words.to_string()),
        ("max_words", s.max_words.to_string()),
        (
            "avg_words_per_sentence",
            format!("{:.4}", s.avg_words_per_sentence),
        ),
        ("total_duration_h", format!("{:.4}", s.total_duration)),
        ("avg_duration_s", format!("{:.4}", s.avg_duration)),
    ];
    for (k, v) in rows {
        w.write_record([k, v.as_str()]).expect("in-memory write");
    }
    finish(w)
}

pub fn run(g: &Globals, args: &PrepArgs) -> Result<Report> {
    let lexicon = match &args.lexicon {
        Some(p) => NormLexicon::from_path(p)?,
        None => NormLexicon::builtin(),
    };
    if args.bin_width == 0 {
        bail!("--bin-width must be at least 1");
    }
    let grids = files_with_ext(&args.textgrids, "TextGrid")?;
    if grids.is_empty() {
        bail!("no .TextGrid files in {}", args.textgrids.display());
    }
    ensure_dir(&args.out.join("wavs"))?;

    let results: Vec<(Segmented, Vec<String>)> = grids
        .par_iter()
        .map(|p| {
            let mut warnings = Vec::new();
            let r = segment(p, &args.wavs, args, &mut warnings);
            (r, warnings)
        })
        .collect();

    let mut errors = Vec::new();
    let mut seen: BTreeMap<String, PathBuf> = BTreeMap::new();
    let mut utterances = Vec::new();
    let mut manifest = ManifestBuilder::new("prep", g.seed, &g.config);
    if let Some(p) = &args.lexicon {
        manifest.input(p);
    }
    for (grid, (result, warnings)) in grids.iter().zip(results) {
        for w in warnings {
            tracing::warn!("{w}");
        }
        manifest.input(grid);
        let stem = grid
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default();
        let wav = args.wavs.join(format!("{stem}.wav"));
        if wav.is_file() {
            manifest.input(&wav);
        }
        match result {
            Err(e) => errors.push(e),
            Ok(items) => {
                for (utt, bytes) in items {
                    if let Some(prev) = seen.insert(utt.id.raw().to_string(), grid.clone()) {
                        errors.push(format!(
                            "{}: utterance id {} already defined in {}",
                            grid.display(),
                            utt.id,
                            prev.display()
                        ));
                        continue;
                    }
                    write(&utt.audio_path, bytes)?;
                    utterances.push(utt);
                }
            }
        }
    }

    let meta = build_metadata(&utterances, &lexicon);
    errors.extend(meta.errors.iter().map(ToString::to_string));
    write(&args.out.join("metadata.csv"), &meta.csv)?;

    // Statistics count words of the normalized text.
    let normalized: Vec<Utterance> = utterances
        .iter()
        .filter_map(|u| {
            normalize(&u.text, &lexicon).ok().map(|r| Utterance {
                text: r.output,
                ..u.clone()
            })
        })
        .filter(|u| !u.text.is_empty())
        .collect();
    if !normalized.is_empty() {
        let stats = compute_stats(&normalized)?;
        emit(
            &args.out,
            "corpus_stats",
            g.format,
            &stats_csv(&stats),
            &stats,
        )?;
        let hist = word_histogram(&normalized, args.bin_width)?;
        let bins: Vec<HistogramBin> = hist
            .iter()
            .map(|&(lower, frequency)| HistogramBin {
                lower,
                upper: lower + args.bin_width - 1,
                frequency,
            })
            .collect();
        let mut w = csv_writer();
        w.write_record(["bin_lower", "bin_upper", "frequency"])
            .expect("in-memory write");
        for b in &bins {
            w.write_record([
                b.lower.to_string(),
                b.upper.to_string(),
                b.frequency.to_string(),
            ])
            .expect("in-memory write");
        }
        emit(&args.out, "word_histogram", g.format, &finish(w), &bins)?;
        write(
            &args.out.join("word_histogram.svg"),
            svg::histogram(&hist, args.bin_width),
        )?;
        println!(
            "{} sentences, {} words ({} unique), {:.2} h",
            stats.n_sentences, stats.n_words, stats.n_unique_words, stats.total_duration
        );
    }
    if !errors.is_empty() {
        let mut text = errors.join("\n");
        text.push('\n');
        write(&args.out.join("errors.txt"), text)?;
    }
    manifest
        .write(&args.out, errors.len())
        .context("writing manifest")?;
    Ok(Report { errors })
}
