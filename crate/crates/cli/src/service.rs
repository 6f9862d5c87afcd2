//! JSON prediction API under `/api/v1/`.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use bcpredict_core::artifact::FeatureSummary;
use bcpredict_core::predict::{predict, PredictRequest};
use bcpredict_core::{Error, FieldError, ModelArtifact};
use serde::Serialize;
use serde_json::Value;
use tower_http::cors::CorsLayer;

type Shared = Arc<ModelArtifact>;

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    fields: Vec<FieldError>,
}

fn error_response(status: StatusCode, error: impl Into<String>, fields: Vec<FieldError>) -> Response {
    (status, Json(ErrorBody { error: error.into(), fields })).into_response()
}

#[derive(Debug, Serialize)]
pub struct ModelInfo<'a> {
    pub model_version: &'a str,
    pub schema_version: u32,
    pub threshold: f64,
    pub feature_names: &'a [String],
    pub features: &'a [FeatureSummary],
    pub label_map: &'a std::collections::BTreeMap<u8, String>,
    pub test_accuracy: f64,
    pub test_auc: f64,
}

pub fn router(artifact: Shared) -> Router {
    Router::new()
        .route("/api/v1/predict", post(predict_handler))
        .route("/api/v1/model", get(model_handler))
        .route("/api/v1/metrics", get(metrics_handler))
        .route("/api/v1/roc", get(roc_handler))
        .fallback(|| async { error_response(StatusCode::NOT_FOUND, "no such route", Vec::new()) })
        .layer(CorsLayer::permissive())
        .with_state(artifact)
}

/// Parses a predict body. Syntax errors are the caller's `Err(None)` (400);
/// shape and value problems come back per field (422).
pub fn parse_predict_body(body: &[u8]) -> Result<PredictRequest, Option<Vec<FieldError>>> {
    let value: Value = serde_json::from_slice(body).map_err(|_| None)?;
    let Some(features) = value.get("features").and_then(Value::as_object) else {
        return Err(Some(vec![FieldError::new("features", "expected an object of feature name to number")]));
    };
    let mut request = PredictRequest::default();
    let mut problems = Vec::new();
    for (name, v) in features {
        match v.as_f64() {
            Some(x) => {
                request.features.insert(name.clone(), x);
            }
            None => problems.push(FieldError::new(name, format!("expected a finite number, got {v}"))),
        }
    }
    if problems.is_empty() {
        Ok(request)
    } else {
        Err(Some(problems))
    }
}

async fn predict_handler(State(artifact): State<Shared>, body: Bytes) -> Response {
    let request = match parse_predict_body(&body) {
        Ok(r) => r,
        Err(None) => return error_response(StatusCode::BAD_REQUEST, "malformed JSON body", Vec::new()),
        Err(Some(fields)) => return error_response(StatusCode::UNPROCESSABLE_ENTITY, "invalid features", fields),
    };
    match predict(&artifact, &request) {
        Ok(response) => Json(response).into_response(),
        Err(Error::InvalidFeatures(fields)) => {
            error_response(StatusCode::UNPROCESSABLE_ENTITY, "invalid features", fields)
        }
        Err(other) => error_response(StatusCode::UNPROCESSABLE_ENTITY, other.to_string(), Vec::new()),
    }
}

async fn model_handler(State(artifact): State<Shared>) -> Response {
    Json(ModelInfo {
        model_version: &artifact.model_version,
        schema_version: artifact.schema_version,
        threshold: artifact.threshold,
        feature_names: &artifact.feature_names,
        features: &artifact.feature_summary,
        label_map: &artifact.label_map,
        test_accuracy: artifact.metrics.accuracy,
        test_auc: artifact.metrics.auc,
    })
    .into_response()
}

async fn metrics_handler(State(artifact): State<Shared>) -> Response {
    Json(&artifact.metrics).into_response()
}

async fn roc_handler(State(artifact): State<Shared>) -> Response {
    Json(&artifact.metrics.roc).into_response()
}

/// Binds `0.0.0.0:port` and serves until the process is stopped.
pub async fn serve(artifact: ModelArtifact, port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    eprintln!("serving model {} on http://{}", artifact.model_version, listener.local_addr()?);
    axum::serve(listener, router(Arc::new(artifact))).await
}
