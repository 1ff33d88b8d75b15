//! HTTP routes.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use caseval_core::asp::export_program;
use caseval_core::dot::render_graphviz;
use caseval_core::fixtures;
use caseval_core::io::{parse_case, to_value, ParseMode};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::ops::Op;
use crate::store::{Preview, Session, Snapshot, Store, StoreError};

pub struct ApiError(StatusCode, Value);

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError(status, json!({ "error": message.into() }))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(self.1)).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound(id) => ApiError::new(StatusCode::NOT_FOUND, format!("no case `{id}`")),
            StoreError::Exists(id) => ApiError::new(StatusCode::CONFLICT, format!("case `{id}` already exists")),
            StoreError::BadId(id) => {
                ApiError::new(StatusCode::BAD_REQUEST, format!("case id `{id}` must be 1-64 letters, digits, `_` or `-`"))
            }
            StoreError::Stale { current } => ApiError(
                StatusCode::CONFLICT,
                json!({ "error": "stale revision", "revision": current }),
            ),
            StoreError::Rejected(r) => {
                ApiError(StatusCode::UNPROCESSABLE_ENTITY, serde_json::to_value(r).expect("rejection serializes"))
            }
            StoreError::Io(e) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, format!("cannot persist case: {e}")),
        }
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Reads a JSON body: malformed JSON is a 400, a well-formed body of the
/// wrong shape a 422.
fn body<T: DeserializeOwned>(bytes: &Bytes) -> ApiResult<T> {
    let value: Value =
        serde_json::from_slice(bytes).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, format!("invalid JSON: {e}")))?;
    serde_json::from_value(value).map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))
}

fn snapshot_fields(out: &mut Value, snapshot: &Snapshot) {
    let Value::Object(fields) = serde_json::to_value(snapshot).expect("snapshot serializes") else { unreachable!() };
    out.as_object_mut().expect("object").extend(fields);
}

fn case_view(s: &Session) -> Value {
    let mut out = json!({
        "id": s.id,
        "revision": s.revision,
        "dirty": s.dirty,
        "document": to_value(&s.doc),
    });
    snapshot_fields(&mut out, &s.snapshot);
    out
}

fn preview_view(id: &str, p: &Preview) -> Value {
    let mut out = json!({ "id": id, "revision": p.revision, "delta": p.delta });
    snapshot_fields(&mut out, &p.snapshot);
    out
}

async fn healthz() -> Json<Value> {
    Json(json!({ "status": "ok" }))
}

async fn list_cases(State(store): State<Arc<Store>>) -> Json<Value> {
    Json(json!({ "cases": store.list().await }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateRequest {
    id: Option<String>,
    document: Option<Value>,
    /// Name of a bundled example to load instead of `document`.
    fixture: Option<String>,
    #[serde(default)]
    lenient: bool,
}

fn default_id(name: &str) -> String {
    let slug: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '-' })
        .take(64)
        .collect();
    if slug.is_empty() {
        "case".into()
    } else {
        slug
    }
}

async fn create_case(State(store): State<Arc<Store>>, bytes: Bytes) -> ApiResult<(StatusCode, Json<Value>)> {
    let req: CreateRequest = body(&bytes)?;
    let text = match (&req.document, &req.fixture) {
        (Some(doc), None) => doc.to_string(),
        (None, Some(name)) => fixtures::by_name(name)
            .ok_or_else(|| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, format!("no fixture `{name}`")))?
            .to_string(),
        _ => return Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "give exactly one of `document` or `fixture`")),
    };
    let mode = if req.lenient { ParseMode::Lenient } else { ParseMode::Strict };
    let doc = parse_case(&text, mode).map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
    let id = req.id.unwrap_or_else(|| default_id(&doc.graph.metadata.name));
    let session = store.create(&id, doc).await?;
    let s = session.lock().await;
    tracing::info!(case = %id, "case created");
    Ok((StatusCode::CREATED, Json(case_view(&s))))
}

async fn get_case(State(store): State<Arc<Store>>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let session = store.get(&id).await?;
    let s = session.lock().await;
    Ok(Json(case_view(&s)))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MutationRequest {
    revision: u64,
    ops: Vec<Op>,
}

async fn mutate(State(store): State<Arc<Store>>, Path(id): Path<String>, bytes: Bytes) -> ApiResult<Json<Value>> {
    store.get(&id).await?;
    let req: MutationRequest = body(&bytes)?;
    let preview = store.mutate(&id, req.revision, &req.ops).await?;
    tracing::info!(case = %id, revision = preview.revision, changed = preview.delta.len(), "mutation applied");
    Ok(Json(preview_view(&id, &preview)))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WhatIfRequest {
    /// Accepted for symmetry with mutations and ignored.
    #[serde(default)]
    #[allow(dead_code)]
    revision: Option<u64>,
    ops: Vec<Op>,
}

async fn whatif(State(store): State<Arc<Store>>, Path(id): Path<String>, bytes: Bytes) -> ApiResult<Json<Value>> {
    store.get(&id).await?;
    let req: WhatIfRequest = body(&bytes)?;
    let preview = store.preview(&id, &req.ops).await?;
    Ok(Json(preview_view(&id, &preview)))
}

#[derive(Deserialize)]
struct ExportQuery {
    to: Option<String>,
}

async fn export(
    State(store): State<Arc<Store>>,
    Path(id): Path<String>,
    Query(q): Query<ExportQuery>,
) -> ApiResult<Response> {
    let session = store.get(&id).await?;
    let s = session.lock().await;
    let (text, content_type) = match q.to.as_deref() {
        Some("asp") => {
            let program = export_program(&s.doc.graph).map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
            (program.render(), "text/plain; charset=utf-8")
        }
        Some("dot") => (render_graphviz(&s.doc.graph, Some(&s.snapshot.assessments)), "text/vnd.graphviz; charset=utf-8"),
        other => {
            return Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                format!("export target must be `asp` or `dot`, got {}", other.map_or("nothing".into(), |t| format!("`{t}`"))),
            ))
        }
    };
    Ok(([(header::CONTENT_TYPE, content_type)], text).into_response())
}

pub fn router(store: Arc<Store>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/cases", get(list_cases).post(create_case))
        .route("/cases/{id}", get(get_case))
        .route("/cases/{id}/mutations", post(mutate))
        .route("/cases/{id}/whatif", post(whatif))
        .route("/cases/{id}/export", get(export))
        .with_state(store)
}
