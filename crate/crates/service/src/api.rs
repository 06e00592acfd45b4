use std::sync::{Arc, Mutex};

use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Utc;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tonaleval::stats::Naturalness;

use crate::store::{Store, SubmitError};
use crate::study::Study;
use crate::token::{decode_token, encode_token};

#[derive(Clone)]
pub struct AppState {
    pub study: Arc<Study>,
    pub store: Arc<Mutex<Store>>,
    /// `None` disables `/api/export`.
    pub export_token: Option<String>,
}

#[derive(Debug)]
pub struct ApiError(StatusCode, String);

impl ApiError {
    fn new(status: StatusCode, msg: impl Into<String>) -> Self {
        ApiError(status, msg.into())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

impl From<crate::store::StoreError> for ApiError {
    fn from(e: crate::store::StoreError) -> Self {
        tracing::error!(error = %e, "rating log write failed");
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "storage failure")
    }
}

impl From<SubmitError> for ApiError {
    fn from(e: SubmitError) -> Self {
        let status = match e {
            SubmitError::UnknownSession => StatusCode::NOT_FOUND,
            SubmitError::ForeignToken => StatusCode::FORBIDDEN,
            SubmitError::NotPresented | SubmitError::RevisionDisabled => StatusCode::CONFLICT,
            SubmitError::Likert => StatusCode::BAD_REQUEST,
        };
        ApiError::new(status, e.to_string())
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq, Clone, Copy)]
pub struct Progress {
    pub completed: usize,
    pub total: usize,
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/session", post(create_session))
        .route("/api/session/{id}/next", get(next_stimulus))
        .route("/api/session/{id}/rating", post(submit_rating))
        .route("/api/audio/{token}", get(audio))
        .route("/api/export", get(export))
        .with_state(state)
}

async fn health(State(st): State<AppState>) -> Json<serde_json::Value> {
    Json(json!({ "status": "ok", "study_id": st.study.id(), "stimuli": st.study.len() }))
}

#[derive(Deserialize)]
struct CreateSession {
    subject_id: String,
}

/// File I/O and `fsync` run off the async workers.
async fn with_store<T: Send + 'static>(
    st: &AppState,
    f: impl FnOnce(&Study, &mut Store) -> ApiResult<T> + Send + 'static,
) -> ApiResult<T> {
    let study = st.study.clone();
    let store = st.store.clone();
    tokio::task::spawn_blocking(move || {
        let mut guard = store.lock().unwrap_or_else(|p| p.into_inner());
        f(&study, &mut guard)
    })
    .await
    .map_err(|_| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "worker failed"))?
}

async fn create_session(
    State(st): State<AppState>,
    Json(body): Json<CreateSession>,
) -> ApiResult<Json<serde_json::Value>> {
    let subject = body.subject_id.trim().to_string();
    if subject.is_empty() || subject.len() > 128 || subject.chars().any(char::is_control) {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "subject_id must be 1-128 printable characters",
        ));
    }
    with_store(&st, move |study, store| {
        let (s, resumed) = store.create_or_resume(study, &subject)?;
        Ok(Json(json!({
            "session_id": s.session_id,
            "resumed": resumed,
            "done": s.is_complete(),
            "progress": Progress { completed: s.cursor(), total: s.total() },
        })))
    })
    .await
}

async fn next_stimulus(
    State(st): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Json<serde_json::Value>> {
    let store = st.store.lock().unwrap_or_else(|p| p.into_inner());
    let s = store
        .session(&id)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown session"))?;
    let progress = Progress {
        completed: s.cursor(),
        total: s.total(),
    };
    Ok(Json(match s.current_stimulus() {
        None => json!({ "done": true, "progress": progress }),
        Some(stim) => {
            let token = encode_token(st.study.key(), &s.session_id, stim);
            json!({ "done": false, "audio_url": format!("/api/audio/{token}"), "token": token, "progress": progress })
        }
    }))
}

async fn audio(State(st): State<AppState>, Path(token): Path<String>) -> ApiResult<Response> {
    let not_found = || ApiError::new(StatusCode::NOT_FOUND, "unknown stimulus");
    let decoded = decode_token(st.study.key(), &token).ok_or_else(not_found)?;
    let audio = {
        let store = st.store.lock().unwrap_or_else(|p| p.into_inner());
        let s = store.session(&decoded.session_id).ok_or_else(not_found)?;
        let p = s.position_of(decoded.stimulus).ok_or_else(not_found)?;
        if p > s.cursor() {
            return Err(not_found());
        }
        if p < s.cursor() && !st.study.manifest.allow_replay {
            return Err(ApiError::new(
                StatusCode::GONE,
                "replay is disabled for this study",
            ));
        }
        st.study.stimuli[decoded.stimulus].audio.clone()
    };
    let mut resp = Response::new(axum::body::Body::from(audio.to_vec()));
    let h = resp.headers_mut();
    h.insert(header::CONTENT_TYPE, HeaderValue::from_static("audio/wav"));
    h.insert(header::CACHE_CONTROL, HeaderValue::from_static("no-store"));
    Ok(resp)
}

#[derive(Deserialize)]
struct RatingBody {
    token: String,
    naturalness: String,
    likert: i64,
}

async fn submit_rating(
    State(st): State<AppState>,
    Path(id): Path<String>,
    Json(body): Json<RatingBody>,
) -> ApiResult<Json<serde_json::Value>> {
    let naturalness: Naturalness = body.naturalness.parse().map_err(|_| {
        ApiError::new(
            StatusCode::BAD_REQUEST,
            "naturalness must be Real or Artificial",
        )
    })?;
    let likert = u8::try_from(body.likert)
        .ok()
        .filter(|v| (1..=5).contains(v))
        .ok_or_else(|| ApiError::from(SubmitError::Likert))?;
    let decoded = decode_token(st.study.key(), &body.token)
        .ok_or_else(|| ApiError::from(SubmitError::ForeignToken))?;
    if decoded.session_id != id {
        return Err(SubmitError::ForeignToken.into());
    }
    with_store(&st, move |study, store| {
        let ack = store.submit(
            study,
            &id,
            decoded.stimulus,
            naturalness,
            likert,
            Utc::now(),
        )??;
        Ok(Json(json!({
            "ok": true,
            "superseded": ack.superseded,
            "done": ack.done,
            "progress": Progress { completed: ack.completed, total: ack.total },
        })))
    })
    .await
}

fn bearer(headers: &HeaderMap) -> Option<&str> {
    headers
        .get(header::AUTHORIZATION)?
        .to_str()
        .ok()?
        .strip_prefix("Bearer ")
}

/// Length-independent comparison so the token cannot be probed byte by byte.
fn token_eq(a: &str, b: &str) -> bool {
    use sha2::{Digest, Sha256};
    let (ha, hb) = (Sha256::digest(a.as_bytes()), Sha256::digest(b.as_bytes()));
    ha.iter()
        .zip(hb.iter())
        .fold(0u8, |acc, (x, y)| acc | (x ^ y))
        == 0
}

async fn export(State(st): State<AppState>, headers: HeaderMap) -> ApiResult<Response> {
    let Some(expected) = st.export_token.as_deref() else {
        return Err(ApiError::new(
            StatusCode::SERVICE_UNAVAILABLE,
            "export is not configured",
        ));
    };
    match bearer(&headers) {
        Some(got) if token_eq(got, expected) => {}
        _ => {
            return Err(ApiError::new(
                StatusCode::UNAUTHORIZED,
                "operator token required",
            ))
        }
    }
    let csv = st
        .store
        .lock()
        .unwrap_or_else(|p| p.into_inner())
        .export_csv();
    Ok((
        [
            (header::CONTENT_TYPE, "text/csv; charset=utf-8"),
            (header::CACHE_CONTROL, "no-store"),
        ],
        csv,
    )
        .into_response())
}
