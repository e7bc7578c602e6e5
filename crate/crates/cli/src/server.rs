//! JSON over HTTP for the interactive what-if client.
//!
//! | method | path                           | body / query                   |
//! |--------|--------------------------------|--------------------------------|
//! | GET    | /models                        |                                |
//! | GET    | /models/{name}                 |                                |
//! | POST   | /models/{name}/evaluate        | `{bindings, result_type}`      |
//! | GET    | /models/{name}/sensitivity     | `?epsilon=&result_type=`       |
//! | GET    | /models/{name}/svg             |                                |
//! | POST   | /sessions                      | `{model, bindings, result_type}` |
//! | GET    | /sessions/{id}                 |                                |
//! | PATCH  | /sessions/{id}/overrides       | `{driver: value or null}`      |
//!
//! Unknown models and sessions answer 404, engine and validation failures
//! 422, and a binding on a computed indicator 409.

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use vdmn_core::engine::{derived_development, sensitivity, what_if, WhatIfReport, DEFAULT_EPSILON};
use vdmn_core::interchange::interchange_value;
use vdmn_core::model::ResultType;
use vdmn_core::render::{to_svg, to_svg_with_values, RenderOptions};
use vdmn_core::validate::has_errors;
use vdmn_core::{evaluate, validate, Bindings, EngineError, FunctionRegistry, Model, ValidationDiagnostic};

use crate::registry::ModelRegistry;

/// Interactive what-if state: base bindings plus the overrides applied so far.
#[derive(Debug, Clone)]
pub struct Session {
    pub id: String,
    pub model: String,
    pub base: Bindings,
    pub overrides: Bindings,
    pub result_type: ResultType,
}

#[derive(Clone)]
pub struct AppState {
    registry: Arc<ModelRegistry>,
    functions: Arc<FunctionRegistry>,
    sessions: Arc<RwLock<HashMap<String, Arc<Mutex<Session>>>>>,
}

impl AppState {
    pub fn new(registry: ModelRegistry) -> Self {
        AppState {
            registry: Arc::new(registry),
            functions: Arc::new(FunctionRegistry::builtin()),
            sessions: Arc::default(),
        }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/models", get(list_models))
        .route("/models/{name}", get(get_model))
        .route("/models/{name}/evaluate", post(evaluate_model))
        .route("/models/{name}/sensitivity", get(model_sensitivity))
        .route("/models/{name}/svg", get(model_svg))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/overrides", patch(patch_overrides))
        .with_state(state)
}

/// Serves until the process is interrupted.
pub async fn serve(registry: ModelRegistry, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("serving {} model(s) on http://{}", registry.len(), listener.local_addr()?);
    axum::serve(listener, router(AppState::new(registry)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

#[derive(Debug)]
pub enum ApiError {
    NotFound(String),
    Engine(EngineError),
    Invalid(Vec<ValidationDiagnostic>),
    BadRequest(String),
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        ApiError::Engine(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match self {
            ApiError::NotFound(what) => (
                StatusCode::NOT_FOUND,
                json!({"error": {"kind": "not_found", "message": format!("{what} not found")}}),
            ),
            ApiError::Engine(e) => {
                let status = match e {
                    EngineError::ConflictingBinding(_) => StatusCode::CONFLICT,
                    _ => StatusCode::UNPROCESSABLE_ENTITY,
                };
                (status, json!({"error": {"kind": e.kind(), "message": e.to_string()}}))
            }
            ApiError::Invalid(diagnostics) => (
                StatusCode::UNPROCESSABLE_ENTITY,
                json!({
                    "error": {"kind": "validation", "message": "model has validation errors"},
                    "diagnostics": diagnostics,
                }),
            ),
            ApiError::BadRequest(message) => (
                StatusCode::UNPROCESSABLE_ENTITY,
                json!({"error": {"kind": "bad_request", "message": message}}),
            ),
        };
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

impl AppState {
    fn model(&self, name: &str) -> ApiResult<Arc<Model>> {
        self.registry
            .get(name)
            .cloned()
            .ok_or_else(|| ApiError::NotFound(format!("model `{name}`")))
    }

    /// The model, refusing ones the validator rejects.
    fn checked_model(&self, name: &str) -> ApiResult<Arc<Model>> {
        let model = self.model(name)?;
        let diags = validate(&model);
        if has_errors(&diags) {
            return Err(ApiError::Invalid(diags));
        }
        Ok(model)
    }

    fn session(&self, id: &str) -> ApiResult<Arc<Mutex<Session>>> {
        self.sessions
            .read()
            .expect("session map poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::NotFound(format!("session `{id}`")))
    }
}

fn bindings(values: &BTreeMap<String, f64>, rt: &ResultType) -> Bindings {
    let mut b = Bindings::new();
    for (id, v) in values {
        b.set(id.clone(), rt.clone(), *v);
    }
    b
}

fn result_type(name: Option<&str>) -> ResultType {
    name.map(ResultType::from_name).unwrap_or_default()
}

async fn list_models(State(state): State<AppState>) -> Json<Vec<String>> {
    Json(state.registry.names().map(str::to_string).collect())
}

async fn get_model(State(state): State<AppState>, Path(name): Path<String>) -> ApiResult<Json<Value>> {
    let model = state.model(&name)?;
    Ok(Json(json!({
        "name": model.name(),
        "model": interchange_value(&model),
        "diagnostics": validate(&model),
        "unresolved_sub_trees": state
            .registry
            .unresolved_sub_trees(&name)
            .iter()
            .map(|s| json!({"boundary": s.boundary, "model": s.model}))
            .collect::<Vec<_>>(),
    })))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EvaluateRequest {
    #[serde(default)]
    bindings: BTreeMap<String, f64>,
    result_type: Option<String>,
}

async fn evaluate_model(
    State(state): State<AppState>,
    Path(name): Path<String>,
    Json(req): Json<EvaluateRequest>,
) -> ApiResult<Json<Value>> {
    let model = state.checked_model(&name)?;
    let rt = result_type(req.result_type.as_deref());
    let valuation = evaluate(&model, &bindings(&req.bindings, &rt), &state.functions, &rt)?;
    Ok(Json(serde_json::to_value(valuation).expect("valuation serializes")))
}

#[derive(Debug, Deserialize)]
struct SensitivityQuery {
    epsilon: Option<f64>,
    result_type: Option<String>,
}

async fn model_sensitivity(
    State(state): State<AppState>,
    Path(name): Path<String>,
    Query(q): Query<SensitivityQuery>,
) -> ApiResult<Json<Value>> {
    let model = state.checked_model(&name)?;
    let rt = result_type(q.result_type.as_deref());
    let report = sensitivity(
        &model,
        &Bindings::new(),
        &state.functions,
        &rt,
        q.epsilon.unwrap_or(DEFAULT_EPSILON),
    )?;
    Ok(Json(serde_json::to_value(report).expect("report serializes")))
}

async fn model_svg(State(state): State<AppState>, Path(name): Path<String>) -> ApiResult<Response> {
    let model = state.model(&name)?;
    let opts = RenderOptions::default();
    let empty = Bindings::new();
    let svg = match evaluate(&model, &empty, &state.functions, &ResultType::Actual) {
        Ok(v) => to_svg_with_values(&model, &opts, &v, &derived_development(&model, &v, &empty)),
        Err(_) => to_svg(&model, &opts),
    }
    .map_err(|e| ApiError::BadRequest(e.to_string()))?;
    Ok(([(header::CONTENT_TYPE, "image/svg+xml")], svg).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SessionRequest {
    model: String,
    #[serde(default)]
    bindings: BTreeMap<String, f64>,
    result_type: Option<String>,
}

fn report(state: &AppState, session: &Session) -> ApiResult<WhatIfReport> {
    let model = state.model(&session.model)?;
    Ok(what_if(
        &model,
        &session.base,
        &session.overrides,
        &state.functions,
        &session.result_type,
    )?)
}

fn session_body(session: &Session, report: &WhatIfReport) -> Value {
    json!({
        "id": session.id,
        "model": session.model,
        "result_type": session.result_type,
        "overrides": session.overrides.iter().map(|(id, _, v)| (id.to_string(), v)).collect::<BTreeMap<_, _>>(),
        "report": report,
    })
}

async fn create_session(
    State(state): State<AppState>,
    Json(req): Json<SessionRequest>,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let model = state.checked_model(&req.model)?;
    let rt = result_type(req.result_type.as_deref());
    let session = Session {
        id: uuid::Uuid::new_v4().to_string(),
        model: model.name().to_string(),
        base: bindings(&req.bindings, &rt),
        overrides: Bindings::new(),
        result_type: rt,
    };
    let report = report(&state, &session)?;
    let body = session_body(&session, &report);
    state
        .sessions
        .write()
        .expect("session map poisoned")
        .insert(session.id.clone(), Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(body)))
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let handle = state.session(&id)?;
    let session = handle.lock().expect("session poisoned");
    let report = report(&state, &session)?;
    Ok(Json(session_body(&session, &report)))
}

/// Merges the given overrides into the session; `null` removes one. The
/// session is left untouched when the result would be rejected.
async fn patch_overrides(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(changes): Json<BTreeMap<String, Option<f64>>>,
) -> ApiResult<Json<Value>> {
    let handle = state.session(&id)?;
    let mut session = handle.lock().expect("session poisoned");
    let mut next = session.overrides.clone();
    for (driver, value) in changes {
        match value {
            Some(v) => {
                next.set(driver, session.result_type.clone(), v);
            }
            None => {
                next.remove(&driver, &session.result_type);
            }
        }
    }
    let candidate = Session {
        overrides: next,
        ..session.clone()
    };
    let report = report(&state, &candidate)?;
    *session = candidate;
    Ok(Json(session_body(&session, &report)))
}
