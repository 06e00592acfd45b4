//! `tonaleval`: corpus preparation, objective metrics, listening-test
//! statistics, tone error rates and the rating server.

mod manifest;
mod metrics_cmd;
mod output;
mod prep;
mod serve_cmd;
mod stats_cmd;
mod svg;
mod ter_cmd;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use tonaleval::signal::FeatureConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "tonaleval",
    version,
    about = "Evaluation toolkit for tonal-language text-to-speech"
)]
pub struct Cli {
    /// Feature extraction settings (`key=value` per line; unlisted keys keep defaults).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed recorded in every manifest; for `serve` it replaces the study's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel stages (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Table output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Segment TextGrid-annotated recordings into a normalized training corpus.
    Prep(prep::PrepArgs),
    /// MCD, RMSE_f0 and F0 correlation for reference/synthesis pairs.
    Metrics(metrics_cmd::MetricsArgs),
    /// MOS summaries, t-tests, Bonferroni comparisons and naturalness rates.
    Stats(stats_cmd::StatsArgs),
    /// Tone error rates and tone-category distributions.
    Ter(ter_cmd::TerArgs),
    /// Run the listening-test server.
    Serve(serve_cmd::ServeArgs),
}

/// Settings shared by every subcommand.
pub struct Globals {
    pub config: FeatureConfig,
    pub seed: Option<u64>,
    pub format: Format,
}

/// Outcome of a command that processes many items.
pub struct Report {
    pub errors: Vec<String>,
}

fn load_config(path: Option<&PathBuf>) -> Result<FeatureConfig> {
    let cfg = match path {
        None => FeatureConfig::default(),
        Some(p) => std::fs::read_to_string(p)
            .with_context(|| format!("reading {}", p.display()))?
            .parse()
            .with_context(|| format!("parsing {}", p.display()))?,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<Report> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build_global()
        .context("starting worker pool")?;
    let globals = Globals {
        config: load_config(cli.config.as_ref())?,
        seed: cli.seed,
        format: cli.format,
    };
    match cli.command {
        Command::Prep(a) => prep::run(&globals, &a),
        Command::Metrics(a) => metrics_cmd::run(&globals, &a),
        Command::Stats(a) => stats_cmd::run(&globals, &a),
        Command::Ter(a) => ter_cmd::run(&globals, &a),
        Command::Serve(a) => serve_cmd::run(&globals, &a),
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(report) if report.errors.is_empty() => ExitCode::SUCCESS,
        Ok(report) => {
            for e in &report.errors {
                eprintln!("error: {e}");
            }
            eprintln!("{} item(s) failed", report.errors.len());
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
