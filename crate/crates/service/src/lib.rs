//! Listening-test server. Stimuli are presented in a per-subject seeded
//! order behind opaque tokens; ratings go to an append-only log that is
//! `fsync`ed before each acknowledgement and replayed on startup.

mod api;
mod store;
mod study;
mod token;

use std::future::Future;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use thiserror::Error;

pub use api::{router, AppState, Progress};
pub use store::{Ack, Session, Store, StoreError, StoredRating, SubmitError};
pub use study::{Stimulus, StimulusEntry, Study, StudyError, StudyManifest};
pub use token::{decode_token, encode_token, session_id, DecodedToken};

#[derive(Debug, Error)]
pub enum ServeError {
    #[error(transparent)]
    Study(#[from] StudyError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("binding {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        source: std::io::Error,
    },
    #[error("server: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub manifest: PathBuf,
    pub log_path: PathBuf,
    pub addr: SocketAddr,
    pub export_token: Option<String>,
    /// Mixed into the token key; empty means tokens depend on the study alone.
    pub secret: Vec<u8>,
    /// Replaces the manifest's randomization seed.
    pub seed: Option<u64>,
}

/// Loads the study and replays the log into a ready-to-route state.
pub fn open_state(cfg: &ServeConfig) -> Result<AppState, ServeError> {
    let study = Study::load_with_seed(&cfg.manifest, &cfg.secret, cfg.seed)?;
    let store = Store::open(&cfg.log_path, &study)?;
    Ok(AppState {
        study: Arc::new(study),
        store: Arc::new(Mutex::new(store)),
        export_token: cfg.export_token.clone(),
    })
}

/// Serves until `shutdown` resolves. `on_bound` receives the actual address
/// (useful with port 0).
pub async fn serve(
    cfg: ServeConfig,
    on_bound: impl FnOnce(SocketAddr),
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> Result<(), ServeError> {
    let state = open_state(&cfg)?;
    let listener = tokio::net::TcpListener::bind(cfg.addr)
        .await
        .map_err(|source| ServeError::Bind {
            addr: cfg.addr,
            source,
        })?;
    on_bound(listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await?;
    tracing::info!("server stopped");
    Ok(())
}

/// Resolves on SIGINT or SIGTERM.
pub async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
}
