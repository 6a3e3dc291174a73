//! HTTP facade over a [`ProvenanceHolder`].
//!
//! | method | path | body / query | result |
//! |---|---|---|---|
//! | POST | `/collect/xes` | XES; `provider`, `detect`, `model` | `{record_ids, change_count}` |
//! | GET | `/instances/{id}/provenance` | `format=prov-n\|prov-json\|dot` | document |
//! | GET | `/instances/{id}/changes` | | change events |
//! | POST | `/models` | model JSON | `{model_id}` |
//! | GET | `/providers` | | provider descriptors |
//! | POST | `/migrate` | `{from, to}` | `{migrated}` |
//! | GET | `/health` | | `{status}` |
//!
//! Errors are JSON bodies `{status, code, detail, violations?}`.

use std::collections::BTreeMap;
use std::future::Future;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use parking_lot::RwLock;
use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};
use uuid::Uuid;

use crate::adaptation::{strip_adaptation, AdaptationError, ChangeEvent};
use crate::detection::{derive_annotated_log, DetectionDefaults, DetectionError};
use crate::holder::{CollectReport, HolderError, IntegrityVerdict, ProvenanceHolder, ProvenanceQuery, ProviderError, RecordKind, Retrieval};
use crate::model::{parse_model, ModelError, ProcessModel};
use crate::prov::{map_to_prov, serialize_prov_json, serialize_provn, to_dot, MappingError};
use crate::violation::Violation;
use crate::xes::{parse_xes, XesError};

pub const INTEGRITY_HEADER: &str = "x-adprov-integrity";
const BODY_LIMIT: usize = 64 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub status: u16,
    pub code: String,
    pub detail: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub violations: Option<Vec<Violation>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_id: Option<Uuid>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, detail: impl ToString) -> Self {
        ApiError {
            status: status.as_u16(),
            code: code.to_string(),
            detail: detail.to_string(),
            violations: None,
            record_id: None,
        }
    }

    fn invalid(detail: impl ToString, violations: Vec<Violation>) -> Self {
        ApiError {
            violations: Some(violations),
            ..ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "validation_failed", detail)
        }
    }

    fn tampered(verdict: &IntegrityVerdict) -> Self {
        let record_id = match verdict {
            IntegrityVerdict::Tampered { record_id, .. } => *record_id,
            IntegrityVerdict::Valid => None,
        };
        ApiError {
            record_id,
            ..ApiError::new(StatusCode::CONFLICT, "store_tampered", verdict)
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

impl From<HolderError> for ApiError {
    fn from(err: HolderError) -> Self {
        match err {
            HolderError::Invalid(v) => ApiError::invalid("submission failed validation", v),
            HolderError::Adaptation(e) => e.into(),
            HolderError::InvalidEntry { .. } => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "validation_failed", err),
            HolderError::UnknownProvider(_) => ApiError::new(StatusCode::NOT_FOUND, "unknown_provider", err),
            HolderError::DuplicateProvider(_) | HolderError::SameProvider(_) => {
                ApiError::new(StatusCode::BAD_REQUEST, "bad_request", err)
            }
            HolderError::ProviderBusy(_) => ApiError::new(StatusCode::CONFLICT, "provider_busy", err),
            HolderError::SourceTampered(ref v) => ApiError {
                detail: err.to_string(),
                ..ApiError::tampered(v)
            },
            HolderError::Provider(ProviderError::DestinationNotEmpty(_)) => {
                ApiError::new(StatusCode::CONFLICT, "destination_not_empty", err)
            }
            HolderError::Provider(_) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "provider_failure", err),
        }
    }
}

impl From<AdaptationError> for ApiError {
    fn from(err: AdaptationError) -> Self {
        match err {
            AdaptationError::Invalid(v) => ApiError::invalid("adaptation annotations failed validation", v),
            other => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "validation_failed", other),
        }
    }
}

impl From<XesError> for ApiError {
    fn from(err: XesError) -> Self {
        match err {
            XesError::Invalid(v) => ApiError::invalid("log failed validation", v),
            other => ApiError::new(StatusCode::BAD_REQUEST, "malformed_xes", other),
        }
    }
}

impl From<DetectionError> for ApiError {
    fn from(err: DetectionError) -> Self {
        match err {
            DetectionError::Adaptation(e) => e.into(),
            other => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "detection_failed", other),
        }
    }
}

impl From<MappingError> for ApiError {
    fn from(err: MappingError) -> Self {
        match err {
            MappingError::Tampered(v) => ApiError::tampered(&v),
            other => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "mapping_failed", other),
        }
    }
}

impl From<QueryRejection> for ApiError {
    fn from(err: QueryRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", err.body_text())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(err: JsonRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", err.body_text())
    }
}

#[derive(Clone)]
struct AppState {
    holder: ProvenanceHolder,
    models: Arc<RwLock<BTreeMap<String, ProcessModel>>>,
}

/// Builds the router. Clones of `holder` share its providers.
pub fn router(holder: ProvenanceHolder) -> Router {
    let state = AppState {
        holder,
        models: Arc::default(),
    };
    Router::new()
        .route("/collect/xes", post(collect_xes))
        .route("/instances/{id}/provenance", get(provenance))
        .route("/instances/{id}/changes", get(changes))
        .route("/models", post(register_model))
        .route("/providers", get(providers))
        .route("/migrate", post(migrate))
        .route("/health", get(health))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(state)
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    holder: ProvenanceHolder,
    addr: SocketAddr,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(holder))
        .with_graceful_shutdown(shutdown)
        .await
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e))?
}

#[derive(Debug, Deserialize)]
struct CollectParams {
    provider: Option<String>,
    #[serde(default)]
    detect: bool,
    model: Option<String>,
}

async fn collect_xes(
    State(state): State<AppState>,
    params: Result<Query<CollectParams>, QueryRejection>,
    body: String,
) -> Result<Json<CollectReport>, ApiError> {
    let Query(params) = params?;
    let model = match (&params.model, params.detect) {
        (Some(id), _) => Some(
            state
                .models
                .read()
                .get(id)
                .cloned()
                .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown_model", format!("model `{id}` is not registered")))?,
        ),
        (None, true) => {
            return Err(ApiError::new(StatusCode::BAD_REQUEST, "bad_request", "detect=true requires a model"));
        }
        (None, false) => None,
    };

    blocking(move || {
        let provider = params.provider.as_deref().unwrap_or(state.holder.default_provider_id());
        let model = model.filter(|_| params.detect);
        Ok(Json(ingest_xes(&state.holder, provider, &body, model.as_ref())?))
    })
    .await
}

/// Parses, optionally derives changes against `detect_with`, and collects.
/// Derivation replaces any adaptation annotations already in the log.
pub fn ingest_xes(
    holder: &ProvenanceHolder,
    provider: &str,
    xes: &str,
    detect_with: Option<&ProcessModel>,
) -> Result<CollectReport, ApiError> {
    let mut log = parse_xes(xes)?;
    if let Some(model) = detect_with {
        log = derive_annotated_log(model, &strip_adaptation(&log), &DetectionDefaults::default())?;
    }
    Ok(holder.collect_log_into(provider, &log)?)
}

#[derive(Debug, Deserialize)]
struct ProvenanceParams {
    format: Option<String>,
    provider: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    ProvN,
    ProvJson,
    Dot,
}

impl ExportFormat {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "prov-n" | "provn" => Some(ExportFormat::ProvN),
            "prov-json" | "json" => Some(ExportFormat::ProvJson),
            "dot" => Some(ExportFormat::Dot),
            _ => None,
        }
    }

    pub fn content_type(&self) -> &'static str {
        match self {
            ExportFormat::ProvN => "text/provenance-notation; charset=utf-8",
            ExportFormat::ProvJson => "application/json",
            ExportFormat::Dot => "text/vnd.graphviz; charset=utf-8",
        }
    }
}

/// Retrieves one instance; 409 on a tampered store, 404 when nothing is
/// stored for it.
fn instance_records(holder: &ProvenanceHolder, id: &str, provider: Option<&str>) -> Result<Retrieval, ApiError> {
    let mut query = ProvenanceQuery::all().instance(id);
    if let Some(p) = provider {
        query = query.provider(p);
    }
    let retrieval = holder.retrieve(&query)?;
    if !retrieval.verdict.is_valid() {
        return Err(ApiError::tampered(&retrieval.verdict));
    }
    if retrieval.records.is_empty() {
        return Err(ApiError::new(StatusCode::NOT_FOUND, "unknown_instance", format!("no provenance for instance `{id}`")));
    }
    Ok(retrieval)
}

/// Renders the provenance of one instance in the given format.
pub fn export_instance(holder: &ProvenanceHolder, id: &str, provider: Option<&str>, format: ExportFormat) -> Result<String, ApiError> {
    let retrieval = instance_records(holder, id, provider)?;
    let doc = map_to_prov(&retrieval.records, &retrieval.verdict)?;
    let text = match format {
        ExportFormat::ProvN => serialize_provn(&doc),
        ExportFormat::ProvJson => serialize_prov_json(&doc),
        ExportFormat::Dot => to_dot(&doc),
    };
    text.map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "serialization_failed", e))
}

async fn provenance(
    State(state): State<AppState>,
    Path(id): Path<String>,
    params: Result<Query<ProvenanceParams>, QueryRejection>,
) -> Result<Response, ApiError> {
    let Query(params) = params?;
    let name = params.format.as_deref().unwrap_or("prov-n");
    let format = ExportFormat::parse(name)
        .ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, "bad_request", format!("unknown format `{name}`")))?;
    let text = blocking(move || export_instance(&state.holder, &id, params.provider.as_deref(), format)).await?;
    Ok((
        [
            (header::CONTENT_TYPE, HeaderValue::from_static(format.content_type())),
            (header::HeaderName::from_static(INTEGRITY_HEADER), HeaderValue::from_static("Valid")),
        ],
        text,
    )
        .into_response())
}

/// Change events of one instance in canonical order.
pub fn instance_changes(holder: &ProvenanceHolder, id: &str, provider: Option<&str>) -> Result<Vec<ChangeEvent>, ApiError> {
    let retrieval = instance_records(holder, id, provider)?;
    let mut changes = Vec::new();
    for record in retrieval.records.iter().filter(|r| r.kind == RecordKind::Change) {
        changes.push(record.change_event().ok_or_else(|| {
            ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "mapping_failed", MappingError::UndecodablePayload(record.record_id))
        })?);
    }
    changes.sort_by(ChangeEvent::canonical_cmp);
    Ok(changes)
}

async fn changes(
    State(state): State<AppState>,
    Path(id): Path<String>,
    params: Result<Query<ProvenanceParams>, QueryRejection>,
) -> Result<Response, ApiError> {
    let Query(params) = params?;
    let changes = blocking(move || instance_changes(&state.holder, &id, params.provider.as_deref())).await?;
    Ok((
        [(header::HeaderName::from_static(INTEGRITY_HEADER), HeaderValue::from_static("Valid"))],
        Json(changes),
    )
        .into_response())
}

/// Content-derived id, so registering the same model twice is idempotent.
pub fn model_id(model: &ProcessModel) -> String {
    let digest = Sha256::digest(model.to_json().as_bytes());
    hex::encode(&digest[..8])
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ModelResponse {
    pub model_id: String,
    pub name: String,
    pub run_count: String,
}

async fn register_model(State(state): State<AppState>, body: String) -> Result<(StatusCode, Json<ModelResponse>), ApiError> {
    let model = parse_model(&body).map_err(|e| match e {
        ModelError::Json(_) => ApiError::new(StatusCode::BAD_REQUEST, "bad_request", e),
        other => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_model", other),
    })?;
    let id = model_id(&model);
    let response = ModelResponse {
        model_id: id.clone(),
        name: model.name().to_string(),
        run_count: model.run_count().to_string(),
    };
    state.models.write().insert(id, model);
    Ok((StatusCode::CREATED, Json(response)))
}

async fn providers(State(state): State<AppState>) -> Json<Vec<crate::holder::ProviderDescriptor>> {
    Json(state.holder.providers())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MigrateRequest {
    pub from: String,
    pub to: String,
}

async fn migrate(
    State(state): State<AppState>,
    body: Result<Json<MigrateRequest>, JsonRejection>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let Json(request) = body?;
    let migrated = blocking(move || Ok(state.holder.migrate(&request.from, &request.to)?)).await?;
    Ok(Json(serde_json::json!({ "migrated": migrated })))
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}
