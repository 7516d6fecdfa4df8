//! HTTP prediction service.
//!
//! Endpoints:
//! - `POST /api/predict`: scores raw text or a list of sentences.
//! - `GET /api/health`: `{status, model_version}`, 503 without a model.
//! - `GET /api/model-info`: the loaded model file's header.
//!
//! The model is loaded once and shared read-only between requests.

use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, State};
use axum::http::{HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::cors::{AllowOrigin, Any, CorsLayer};

use crate::artifact::ModelArtifact;
use crate::error::{Error, Result};
use crate::neural::AttentionVariant;
use crate::pipeline::ModelFamily;
use crate::predict::{prepare_text, score_sentences, PredictOptions, ScoredSentence, SentenceInput};

/// Largest accepted request body in bytes.
pub const MAX_BODY_BYTES: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentences: Option<Vec<SentenceInput>>,
    /// Section type applied to every sentence of `raw_text`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub section_type: Option<String>,
    #[serde(default = "default_true")]
    pub contextual: bool,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub two_pass: bool,
}

fn default_true() -> bool {
    true
}

fn default_threshold() -> f64 {
    0.5
}

impl PredictRequest {
    pub fn options(&self) -> PredictOptions {
        PredictOptions {
            threshold: self.threshold,
            contextual: self.contextual,
            two_pass: self.two_pass,
        }
    }

    /// The sentences to score. Exactly one input field must be present.
    pub fn inputs(&self) -> Result<Vec<SentenceInput>> {
        match (&self.raw_text, &self.sentences) {
            (Some(raw), None) => Ok(prepare_text(raw, self.section_type.as_deref())),
            (None, Some(s)) => Ok(s.clone()),
            _ => Err(Error::InvalidArgument(
                "exactly one of raw_text and sentences must be given".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub family: ModelFamily,
    pub attention_variant: Option<AttentionVariant>,
    pub version: u32,
}

impl ModelInfo {
    pub fn of(a: &ModelArtifact) -> Self {
        Self {
            family: a.header.family,
            attention_variant: a.header.attention_variant,
            version: a.header.format_version,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictResponse {
    pub sentences: Vec<ScoredSentence>,
    pub model_info: ModelInfo,
}

/// Scores a request against a model; the service and the command line share it.
pub fn respond(artifact: &ModelArtifact, req: &PredictRequest) -> Result<PredictResponse> {
    let sentences = score_sentences(&artifact.model, &req.inputs()?, &req.options())?;
    Ok(PredictResponse {
        sentences,
        model_info: ModelInfo::of(artifact),
    })
}

#[derive(Debug, Clone, Default)]
pub struct ServiceConfig {
    /// Allowed CORS origins; empty allows any origin.
    pub cors_origins: Vec<String>,
}

type Shared = Option<Arc<ModelArtifact>>;

fn error(status: StatusCode, msg: impl Into<String>) -> Response {
    (status, Json(json!({ "error": msg.into() }))).into_response()
}

fn unavailable() -> Response {
    error(StatusCode::SERVICE_UNAVAILABLE, "no model loaded")
}

async fn predict(State(model): State<Shared>, body: Bytes) -> Response {
    let Some(model) = model else {
        return unavailable();
    };
    let req: PredictRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("malformed request: {e}")),
    };
    let out = tokio::task::spawn_blocking(move || respond(&model, &req)).await;
    match out {
        Ok(Ok(resp)) => Json(resp).into_response(),
        Ok(Err(e @ Error::InvalidArgument(_))) => error(StatusCode::BAD_REQUEST, e.to_string()),
        Ok(Err(e)) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn health(State(model): State<Shared>) -> Response {
    match model {
        Some(m) => Json(json!({ "status": "ok", "model_version": m.header.format_version })).into_response(),
        None => (
            StatusCode::SERVICE_UNAVAILABLE,
            Json(json!({ "status": "unavailable", "model_version": null })),
        )
            .into_response(),
    }
}

async fn model_info(State(model): State<Shared>) -> Response {
    match model {
        Some(m) => Json(m.header.clone()).into_response(),
        None => unavailable(),
    }
}

fn cors(config: &ServiceConfig) -> Result<CorsLayer> {
    let layer = CorsLayer::new().allow_methods(Any).allow_headers(Any);
    if config.cors_origins.is_empty() {
        return Ok(layer.allow_origin(Any));
    }
    let origins = config
        .cors_origins
        .iter()
        .map(|o| {
            HeaderValue::from_str(o).map_err(|_| Error::InvalidArgument(format!("invalid CORS origin {o:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(layer.allow_origin(AllowOrigin::list(origins)))
}

/// The service routes over an optional model.
pub fn router(model: Option<ModelArtifact>, config: &ServiceConfig) -> Result<Router> {
    Ok(Router::new()
        .route("/api/predict", post(predict))
        .route("/api/health", get(health))
        .route("/api/model-info", get(model_info))
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .layer(cors(config)?)
        .with_state(model.map(Arc::new)))
}

/// Loads the model file, logging instead of failing when it is unusable
/// so that health reports 503.
pub fn load_for_service(path: &Path) -> Option<ModelArtifact> {
    match ModelArtifact::load(path) {
        Ok(a) => Some(a),
        Err(e) => {
            log::error!("{e}");
            None
        }
    }
}

/// Serves until interrupted.
pub async fn serve(addr: SocketAddr, app: Router) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
