use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use ctxsearch_core::session::{Phase, SessionApi, SessionService, Stage};
use ctxsearch_core::Error;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::{Envelope, ErrorBody, ErrorResponse};

type Shared = Arc<SessionService>;

struct ApiError(Error);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, kind) = match &self.0 {
            Error::Validation(_) | Error::Parse { .. } | Error::Record { .. } => {
                (StatusCode::BAD_REQUEST, "validation")
            }
            Error::NotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
            Error::State(_) => (StatusCode::CONFLICT, "state"),
            Error::Adapter(_) => (StatusCode::BAD_GATEWAY, "adapter"),
            Error::Load { .. } | Error::Storage(_) => (StatusCode::INTERNAL_SERVER_ERROR, "storage"),
        };
        let body = Envelope::new(ErrorResponse {
            error: ErrorBody {
                kind: kind.into(),
                message: self.0.to_string(),
            },
        });
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<Envelope<T>>, ApiError>;

/// Runs a blocking service call off the async workers.
async fn blocking<T: Send + 'static>(
    svc: &Shared,
    f: impl FnOnce(&SessionService) -> ctxsearch_core::Result<T> + Send + 'static,
) -> ApiResult<T> {
    let svc = svc.clone();
    let out = tokio::task::spawn_blocking(move || f(&svc))
        .await
        .map_err(|e| ApiError(Error::State(format!("worker failed: {e}"))))??;
    Ok(Json(Envelope::new(out)))
}

#[derive(Deserialize)]
struct CreateSession {
    user_id: Option<String>,
    phase: String,
    #[serde(default)]
    task_id: String,
}

#[derive(Serialize)]
struct SessionBody<T> {
    session: T,
}

async fn create_session(
    State(svc): State<Shared>,
    headers: HeaderMap,
    Json(req): Json<CreateSession>,
) -> Result<(StatusCode, Json<Envelope<SessionBody<ctxsearch_core::session::SessionInfo>>>), ApiError> {
    let phase: Phase = req.phase.parse()?;
    let user = req
        .user_id
        .or_else(|| headers.get("x-user-id").and_then(|v| v.to_str().ok()).map(String::from))
        .ok_or_else(|| Error::Validation("user_id is required".into()))?;
    let Json(out) = blocking(&svc, move |s| {
        s.create_session(&user, phase, &req.task_id).map(|session| SessionBody { session })
    })
    .await?;
    Ok((StatusCode::CREATED, Json(out)))
}

async fn get_session(State(svc): State<Shared>, Path(id): Path<String>) -> ApiResult<serde_json::Value> {
    blocking(&svc, move |s| {
        let info = s.session_info(&id)?;
        let query = s.current_query(&id)?;
        Ok(json!({ "session": info, "query": query }))
    })
    .await
}

#[derive(Deserialize)]
struct SubmitQuery {
    query: String,
}

async fn submit_query(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    Json(req): Json<SubmitQuery>,
) -> ApiResult<ctxsearch_core::session::Offer> {
    blocking(&svc, move |s| s.submit_query(&id, &req.query)).await
}

async fn recommendations(State(svc): State<Shared>, Path(id): Path<String>) -> ApiResult<ctxsearch_core::session::Offer> {
    blocking(&svc, move |s| s.recommendations(&id)).await
}

#[derive(Deserialize)]
struct Selection {
    stage: String,
    #[serde(default)]
    chosen: Vec<String>,
}

async fn apply_selection(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    Json(req): Json<Selection>,
) -> ApiResult<ctxsearch_core::session::Offer> {
    let stage: Stage = req.stage.parse()?;
    blocking(&svc, move |s| s.apply_selection(&id, stage, &req.chosen)).await
}

#[derive(Deserialize)]
struct PageQuery {
    page: Option<usize>,
}

async fn results(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<PageQuery>,
) -> ApiResult<serde_json::Value> {
    let page = q.page.unwrap_or(1);
    blocking(&svc, move |s| Ok(json!({ "page": page, "hits": s.results(&id, page)? }))).await
}

#[derive(Deserialize)]
struct Click {
    url: String,
}

async fn report_click(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    Json(req): Json<Click>,
) -> ApiResult<serde_json::Value> {
    blocking(&svc, move |s| Ok(json!({ "metrics": s.report_click(&id, &req.url)? }))).await
}

#[derive(Deserialize)]
struct Complete {
    #[serde(default)]
    found: bool,
}

async fn complete(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    Json(req): Json<Complete>,
) -> ApiResult<serde_json::Value> {
    blocking(&svc, move |s| Ok(json!({ "metrics": s.complete_task(&id, req.found)? }))).await
}

async fn metrics(State(svc): State<Shared>, Path(id): Path<String>) -> ApiResult<serde_json::Value> {
    blocking(&svc, move |s| {
        let metrics = s.metrics(&id)?;
        let state = s.session_info(&id)?.state;
        Ok(json!({ "metrics": metrics, "state": state }))
    })
    .await
}

#[derive(Deserialize)]
struct Limit {
    limit: Option<usize>,
}

async fn profile(
    State(svc): State<Shared>,
    Path(user): Path<String>,
    Query(q): Query<Limit>,
) -> ApiResult<serde_json::Value> {
    let limit = q.limit.unwrap_or(20);
    blocking(&svc, move |s| {
        let entries = s.profile_entries(&user, limit)?;
        Ok(json!({ "user_id": user, "entries": entries }))
    })
    .await
}

async fn sckb_stats(State(svc): State<Shared>) -> ApiResult<serde_json::Value> {
    blocking(&svc, |s| {
        let stats = s.sckb_stats();
        Ok(json!({
            "enabled": s.config().sckb_enabled,
            "entries": stats.entries,
            "contributions": stats.contributions,
        }))
    })
    .await
}

pub fn router(service: Arc<SessionService>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/query", post(submit_query))
        .route("/sessions/{id}/recommendations", get(recommendations))
        .route("/sessions/{id}/selections", post(apply_selection))
        .route("/sessions/{id}/results", get(results))
        .route("/sessions/{id}/clicks", post(report_click))
        .route("/sessions/{id}/complete", post(complete))
        .route("/sessions/{id}/metrics", get(metrics))
        .route("/users/{id}/profile", get(profile))
        .route("/sckb/stats", get(sckb_stats))
        .with_state(service)
}

/// Serves until the listener fails.
pub async fn serve(listener: tokio::net::TcpListener, service: Arc<SessionService>) -> std::io::Result<()> {
    axum::serve(listener, router(service)).await
}
