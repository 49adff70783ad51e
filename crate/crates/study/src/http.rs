use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use inpaint_eval_core::judgements::Side;
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use crate::{Study, StudyError};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
    pub total_pairs: usize,
}

/// What a participant sees of a pair. Variant names and the correct side
/// are deliberately absent.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairView {
    pub pair_id: String,
    pub image_id: String,
    pub left_url: String,
    pub right_url: String,
    /// Zero-based position in the session.
    pub index: usize,
    pub total: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NextPair {
    Pair(PairView),
    Done { done: bool },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChoiceRequest {
    pub pair_id: String,
    pub chosen: Side,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChoiceAck {
    /// Position of the next pair.
    pub index: usize,
    pub total: usize,
    pub done: bool,
}

struct ApiError(StatusCode, String);

impl From<StudyError> for ApiError {
    fn from(e: StudyError) -> Self {
        let status = match &e {
            StudyError::UnknownSession(_) | StudyError::UnknownPair(_) => StatusCode::NOT_FOUND,
            StudyError::AlreadyAnswered { .. } | StudyError::PairMismatch { .. } => StatusCode::CONFLICT,
            _ => {
                tracing::error!(error = %e, "request failed");
                StatusCode::INTERNAL_SERVER_ERROR
            }
        };
        ApiError(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(serde_json::json!({ "error": self.1 }))).into_response()
    }
}

#[derive(Clone)]
struct AppState {
    study: Arc<Study>,
    operator_token: Option<Arc<str>>,
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, StudyError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
        .map_err(ApiError::from)
}

async fn create_session(State(app): State<AppState>) -> Result<(StatusCode, Json<SessionCreated>), ApiError> {
    let created = blocking(move || app.study.create_session()).await?;
    Ok((StatusCode::CREATED, Json(created)))
}

async fn next_pair(State(app): State<AppState>, Path(id): Path<String>) -> Result<Json<NextPair>, ApiError> {
    Ok(Json(app.study.next_pair(&id)?))
}

async fn record_choice(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<ChoiceRequest>,
) -> Result<Json<ChoiceAck>, ApiError> {
    Ok(Json(
        blocking(move || app.study.record_choice(&id, &req.pair_id, req.chosen)).await?,
    ))
}

async fn image(State(app): State<AppState>, Path((pair_id, side)): Path<(String, Side)>) -> Result<Response, ApiError> {
    let path = app
        .study
        .image_path(&pair_id, side)
        .ok_or_else(|| ApiError::from(StudyError::UnknownPair(pair_id)))?;
    let bytes = tokio::fs::read(&path)
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, format!("cannot read image: {e}")))?;
    Ok((
        [(header::CONTENT_TYPE, "image/png"), (header::CACHE_CONTROL, "no-store")],
        bytes,
    )
        .into_response())
}

fn authorize(app: &AppState, headers: &HeaderMap) -> Result<(), ApiError> {
    let Some(expected) = app.operator_token.as_deref() else {
        return Err(ApiError(
            StatusCode::FORBIDDEN,
            "export is disabled: no operator token configured".into(),
        ));
    };
    let given = headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "));
    if given == Some(expected) {
        Ok(())
    } else {
        Err(ApiError(
            StatusCode::UNAUTHORIZED,
            "missing or wrong operator token".into(),
        ))
    }
}

fn csv_response(bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], bytes).into_response()
}

async fn export(State(app): State<AppState>, headers: HeaderMap) -> Result<Response, ApiError> {
    authorize(&app, &headers)?;
    Ok(csv_response(app.study.with_state(|s| s.judgements_csv())?))
}

async fn export_key(State(app): State<AppState>, headers: HeaderMap) -> Result<Response, ApiError> {
    authorize(&app, &headers)?;
    Ok(csv_response(app.study.with_state(|s| s.verification_key_csv())?))
}

/// The study API, plus static frontend assets at `/` when `static_dir` is
/// given. Export endpoints require `Authorization: Bearer <operator_token>`.
pub fn router(study: Arc<Study>, operator_token: Option<String>, static_dir: Option<PathBuf>) -> Router {
    let app = AppState {
        study,
        operator_token: operator_token.filter(|t| !t.is_empty()).map(Arc::from),
    };
    let api = Router::new()
        .route("/api/session", post(create_session))
        .route("/api/session/{id}/pair", get(next_pair))
        .route("/api/session/{id}/choice", post(record_choice))
        .route("/api/image/{pair_id}/{side}", get(image))
        .route("/api/export", get(export))
        .route("/api/export/verification-key", get(export_key))
        .with_state(app);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Serves `app` on `listener` until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    app: Router,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}
