//! JSON API over [`Service`]. Every mutation holds the service lock from
//! validation through the synced log write, so concurrent duplicates cannot
//! both succeed.

use std::future::Future;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::net::TcpListener;
use tower_http::services::ServeDir;

use super::store::{Service, ServiceError};

type Shared = Arc<Mutex<Service>>;

pub struct ApiError(ServiceError);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match self.0 {
            ServiceError::UnknownDataset(_) | ServiceError::UnknownSession(_) | ServiceError::UnknownItem(_) => {
                StatusCode::NOT_FOUND
            }
            ServiceError::AlreadyAnswered(_) => StatusCode::CONFLICT,
            ServiceError::NotInFold(_) | ServiceError::InvalidChoice(_) | ServiceError::InvalidAnnotator => {
                StatusCode::BAD_REQUEST
            }
            ServiceError::NoData(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Storage(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(json!({ "error": self.0.code(), "message": self.0.to_string() }))).into_response()
    }
}

type ApiResult = Result<Json<Value>, ApiError>;

/// Runs `f` under the lock on the blocking pool; log writes sync to disk.
async fn with_service<T: Send + 'static>(
    state: Shared,
    f: impl FnOnce(&mut Service) -> Result<T, ServiceError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(move || {
        let mut service = state.lock().unwrap_or_else(|poison| poison.into_inner());
        f(&mut service)
    })
    .await
    .map_err(|e| ApiError(ServiceError::Storage(std::io::Error::other(e))))?
    .map_err(ApiError)
}

fn to_json<T: serde::Serialize>(value: T) -> Json<Value> {
    Json(serde_json::to_value(value).expect("responses serialize"))
}

#[derive(Deserialize)]
struct NewSession {
    annotator_id: String,
    dataset: String,
}

async fn create_session(State(state): State<Shared>, Json(body): Json<NewSession>) -> ApiResult {
    let s = with_service(state, move |svc| svc.create_session(&body.annotator_id, &body.dataset)).await?;
    Ok(to_json(s))
}

async fn get_session(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult {
    let s = with_service(state, move |svc| svc.session(&id)).await?;
    Ok(to_json(s))
}

async fn next_item(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult {
    let item = with_service(state, move |svc| svc.next_item(&id)).await?;
    Ok(Json(match item {
        Some(item) => {
            let mut v = serde_json::to_value(item).expect("items serialize");
            v["done"] = Value::Bool(false);
            v
        }
        None => json!({ "done": true }),
    }))
}

#[derive(Deserialize)]
struct Answer {
    item_id: String,
    guess: String,
}

async fn submit_answer(State(state): State<Shared>, Path(id): Path<String>, Json(body): Json<Answer>) -> ApiResult {
    let r = with_service(state, move |svc| svc.submit_answer(&id, &body.item_id, &body.guess)).await?;
    Ok(to_json(r))
}

#[derive(Deserialize)]
struct DatasetQuery {
    dataset: String,
}

async fn leaderboard(State(state): State<Shared>, Query(q): Query<DatasetQuery>) -> ApiResult {
    let board = with_service(state, move |svc| svc.leaderboard(&q.dataset)).await?;
    Ok(to_json(board))
}

async fn stats(State(state): State<Shared>, Query(q): Query<DatasetQuery>) -> ApiResult {
    let stats = with_service(state, move |svc| svc.human_stats(&q.dataset)).await?;
    Ok(to_json(stats))
}

async fn datasets(State(state): State<Shared>) -> ApiResult {
    let list = with_service(state, |svc| Ok(svc.datasets())).await?;
    let list: Vec<Value> = list
        .into_iter()
        .map(|(name, items, choices)| json!({ "name": name, "items": items, "choices": choices }))
        .collect();
    Ok(Json(json!({ "datasets": list })))
}

async fn health() -> Json<Value> {
    Json(json!({ "status": "ok" }))
}

/// API routes under `/api`, dataset media under `/media`, and an optional
/// static UI directory at the root.
pub fn router(service: Service, media_dir: PathBuf, ui_dir: Option<PathBuf>) -> Router {
    let state: Shared = Arc::new(Mutex::new(service));
    let api = Router::new()
        .route("/api/health", get(health))
        .route("/api/datasets", get(datasets))
        .route("/api/session", post(create_session))
        .route("/api/session/{id}", get(get_session))
        .route("/api/session/{id}/next", get(next_item))
        .route("/api/session/{id}/answer", post(submit_answer))
        .route("/api/leaderboard", get(leaderboard))
        .route("/api/stats", get(stats))
        .with_state(state)
        .nest_service("/media", ServeDir::new(media_dir));
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

pub async fn serve(
    listener: TcpListener,
    app: Router,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}
