use std::net::SocketAddr;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use tonaleval_service::{serve, shutdown_signal, ServeConfig};

use crate::{Globals, Report};

/// Operator bearer token for `GET /api/export`.
pub const EXPORT_TOKEN_ENV: &str = "TONALEVAL_EXPORT_TOKEN";
/// Optional extra key material for session ids and stimulus tokens.
pub const SECRET_ENV: &str = "TONALEVAL_SECRET";

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Study manifest (JSON).
    #[arg(long)]
    study: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
    /// Rating log; defaults to `ratings.ndjson` beside the manifest.
    #[arg(long)]
    log: Option<PathBuf>,
}

pub fn run(g: &Globals, args: &ServeArgs) -> Result<Report> {
    let log_path = match &args.log {
        Some(p) => p.clone(),
        None => args
            .study
            .parent()
            .unwrap_or(std::path::Path::new("."))
            .join("ratings.ndjson"),
    };
    let export_token = std::env::var(EXPORT_TOKEN_ENV)
        .ok()
        .filter(|t| !t.is_empty());
    if export_token.is_none() {
        tracing::warn!("{EXPORT_TOKEN_ENV} is unset; /api/export is disabled");
    }
    let cfg = ServeConfig {
        manifest: args.study.clone(),
        log_path,
        addr: args.listen,
        export_token,
        secret: std::env::var(SECRET_ENV).unwrap_or_default().into_bytes(),
        seed: g.seed,
    };
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .context("starting runtime")?;
    rt.block_on(serve(
        cfg,
        |addr| {
            println!("listening on http://{addr}");
            use std::io::Write;
            let _ = std::io::stdout().flush();
        },
        shutdown_signal(),
    ))?;
    Ok(Report { errors: Vec::new() })
}
