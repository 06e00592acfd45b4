use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Serialize;
use tonaleval::stats::{
    export_long_format, ingest_scores, mos_summary, naturalness_rates, pairwise_bonferroni,
    parse_long_format, render_mos_csv, render_pairwise_csv, render_rates_csv, validate_records,
    Grouping, MosSummary, NaturalnessRates, PairwiseComparison, StatsError,
};

use crate::manifest::ManifestBuilder;
use crate::output::{csv_writer, ensure_dir, finish, write};
use crate::{Format, Globals, Report};

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Ratings in long format (`subject,sentence,type,mos,naturalness`).
    #[arg(long)]
    ratings: PathBuf,
    /// Externally computed scores (`condition,id,score`), e.g. DNSMOS.
    #[arg(long)]
    scores: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Averaging for per-condition scaled means: `condition` or `condition-sentence`.
    #[arg(long, default_value = "condition")]
    grouping: Grouping,
}

#[derive(Serialize)]
struct ScoreSection {
    means: Vec<(String, usize, f64)>,
    t_tests: Vec<PairwiseComparison>,
}

#[derive(Serialize)]
struct StatsJson<'a> {
    grouping: Grouping,
    mos: &'a MosSummary,
    bonferroni: &'a [PairwiseComparison],
    naturalness: &'a NaturalnessRates,
    scores: Option<ScoreSection>,
}

pub fn run(g: &Globals, args: &StatsArgs) -> Result<Report> {
    let text = std::fs::read_to_string(&args.ratings)
        .with_context(|| format!("reading {}", args.ratings.display()))?;
    let records = parse_long_format(&text).with_context(|| args.ratings.display().to_string())?;
    if records.is_empty() {
        bail!("{}: no ratings", args.ratings.display());
    }
    validate_records(&records)?;
    ensure_dir(&args.out)?;
    let mut manifest = ManifestBuilder::new("stats", g.seed, &g.config);
    manifest.input(&args.ratings);

    let mos = mos_summary(&records, args.grouping)?;
    if let Some(z) = &mos.rescale {
        for e in &z.excluded {
            eprintln!(
                "warning: subject {} excluded from z-normalization ({:?}, {} ratings)",
                e.subject, e.reason, e.n_ratings
            );
        }
    }
    let bonferroni = match pairwise_bonferroni(&records, args.grouping) {
        Ok(rows) => rows,
        Err(e @ (StatsError::TooFewConditions(_) | StatsError::NoUsableSubjects)) => {
            eprintln!("warning: no pairwise comparison: {e}");
            Vec::new()
        }
        Err(e) => return Err(e.into()),
    };
    let rates = naturalness_rates(&records)?;

    let scores = match &args.scores {
        None => None,
        Some(p) => {
            manifest.input(p);
            let text =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let table = ingest_scores(&text).with_context(|| p.display().to_string())?;
            let means = table
                .scores
                .iter()
                .map(|(c, m)| (c.clone(), m.len(), m.values().sum::<f64>() / m.len() as f64))
                .collect();
            let t_tests = if table.scores.len() >= 2 {
                table.pairwise_t_tests()?
            } else {
                Vec::new()
            };
            for t in &t_tests {
                if t.t.is_none() {
                    eprintln!(
                        "warning: {} vs {}: all differences equal, t is degenerate",
                        t.first, t.second
                    );
                }
            }
            Some(ScoreSection { means, t_tests })
        }
    };

    match g.format {
        Format::Csv => {
            write(&args.out.join("mos_summary.csv"), render_mos_csv(&mos))?;
            write(
                &args.out.join("bonferroni.csv"),
                render_pairwise_csv(&bonferroni),
            )?;
            let (by_cond, by_sentence) = render_rates_csv(&rates);
            write(&args.out.join("naturalness_by_condition.csv"), by_cond)?;
            write(&args.out.join("naturalness_by_sentence.csv"), by_sentence)?;
            if let Some(s) = &scores {
                let mut w = csv_writer();
                w.write_record(["condition", "n", "mean"])
                    .expect("in-memory write");
                for (c, n, m) in &s.means {
                    w.write_record([c.clone(), n.to_string(), format!("{m:.4}")])
                        .expect("in-memory write");
                }
                write(&args.out.join("score_means.csv"), finish(w))?;
                write(
                    &args.out.join("score_ttests.csv"),
                    render_pairwise_csv(&s.t_tests),
                )?;
            }
        }
        Format::Json => {
            let json = StatsJson {
                grouping: args.grouping,
                mos: &mos,
                bonferroni: &bonferroni,
                naturalness: &rates,
                scores,
            };
            write(
                &args.out.join("stats.json"),
                serde_json::to_string_pretty(&json)? + "\n",
            )?;
        }
    }
    write(
        &args.out.join("long_format.csv"),
        export_long_format(&records)?,
    )?;
    manifest.write(&args.out, 0)?;
    for r in &mos.rows {
        let scaled = r.scaled_mean.map_or("n/a".into(), |v| format!("{v:.2}"));
        println!(
            "{}: n={} raw MOS {:.2}, scaled {}",
            r.condition, r.n, r.raw_mean, scaled
        );
    }
    Ok(Report { errors: Vec::new() })
}
