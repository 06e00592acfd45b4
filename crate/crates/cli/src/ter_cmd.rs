use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Serialize;
use tonaleval::metrics::{
    parse_tone_annotations, ter_summary, tone_error_distribution, TerError, TerSummary, Tone,
    ToneDistribution,
};

use crate::manifest::ManifestBuilder;
use crate::output::{csv_writer, emit, ensure_dir, finish, write};
use crate::{Globals, Report};

#[derive(Debug, Args)]
pub struct TerArgs {
    /// Annotation CSVs (`id,n_tbu,error_index,intended_tone`), one per system;
    /// the file stem names the system.
    #[arg(required = true)]
    annotations: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct SystemTer {
    system: String,
    summary: TerSummary,
    /// `None` when the system made no tone errors.
    distribution: Option<ToneDistribution>,
}

pub fn run(g: &Globals, args: &TerArgs) -> Result<Report> {
    ensure_dir(&args.out)?;
    let mut manifest = ManifestBuilder::new("ter", g.seed, &g.config);
    let mut systems = Vec::new();
    let mut errors = Vec::new();
    for path in &args.annotations {
        manifest.input(path);
        let system = path
            .file_stem()
            .and_then(|s| s.to_str())
            .context("annotation file name")?
            .to_string();
        if systems.iter().any(|s: &SystemTer| s.system == system) {
            bail!("two annotation files share the system name {system}");
        }
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let annotations = match parse_tone_annotations(&text) {
            Ok(a) => a,
            Err(e) => {
                errors.push(format!("{}: {e}", path.display()));
                continue;
            }
        };
        let summary = match ter_summary(&annotations) {
            Ok(s) => s,
            Err(e) => {
                errors.push(format!("{}: {e}", path.display()));
                continue;
            }
        };
        let distribution = match tone_error_distribution(&annotations) {
            Ok(d) => Some(d),
            Err(TerError::NoErrors) => {
                println!("{system}: no errors");
                None
            }
            Err(e) => return Err(e.into()),
        };
        println!(
            "{system}: average TER {:.2} % over {} sentences",
            summary.average,
            summary.rows.len()
        );
        systems.push(SystemTer {
            system,
            summary,
            distribution,
        });
    }

    let mut w = csv_writer();
    w.write_record(["system", "id", "n_tbu", "n_errors", "ter"])
        .expect("in-memory write");
    for s in &systems {
        for r in &s.summary.rows {
            w.write_record([
                s.system.clone(),
                r.id.clone(),
                r.n_tbu.to_string(),
                r.n_errors.to_string(),
                format!("{:.4}", r.ter),
            ])
            .expect("in-memory write");
        }
        let n_tbu: usize = s.summary.rows.iter().map(|r| r.n_tbu).sum();
        let n_err: usize = s.summary.rows.iter().map(|r| r.n_errors).sum();
        w.write_record([
            s.system.clone(),
            "AVERAGE".into(),
            n_tbu.to_string(),
            n_err.to_string(),
            format!("{:.4}", s.summary.average),
        ])
        .expect("in-memory write");
    }
    let ter_csv = finish(w);

    let mut w = csv_writer();
    w.write_record(["system", "tone", "count", "percent"])
        .expect("in-memory write");
    for s in &systems {
        if let Some(d) = &s.distribution {
            for t in Tone::ALL {
                w.write_record([
                    s.system.clone(),
                    t.to_string(),
                    d.counts[&t].to_string(),
                    format!("{:.4}", d.percent[&t]),
                ])
                .expect("in-memory write");
            }
        }
    }
    let dist_csv = finish(w);

    match g.format {
        crate::Format::Csv => {
            write(&args.out.join("ter.csv"), ter_csv)?;
            write(&args.out.join("tone_distribution.csv"), dist_csv)?;
        }
        crate::Format::Json => {
            emit(&args.out, "ter", g.format, "", &systems)?;
        }
    }
    if !errors.is_empty() {
        write(&args.out.join("errors.txt"), errors.join("\n") + "\n")?;
    }
    manifest.write(&args.out, errors.len())?;
    Ok(Report { errors })
}
