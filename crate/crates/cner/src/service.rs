//! HTTP front end: `GET /health`, `GET /extractors`, `GET /models` and
//! `POST /analyze`.

use std::future::Future;
use std::sync::{Arc, RwLock};

use axum::body::{Body, Bytes};
use axum::extract::{DefaultBodyLimit, FromRequest, Multipart, Request, State};
use axum::http::header::{CONTENT_LENGTH, CONTENT_TYPE};
use axum::http::{HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use cner_core::text::Source;
use http_body_util::BodyExt;
use tokio::net::TcpListener;

use crate::extractor::ExtractorDescriptor;
use crate::pipeline::{AnalyzeOptions, Analyzer};
use crate::wire::{self, AnalyzeRequest, ApiError, ErrorCode, Health, ModelInfo};

/// Room for multipart boundaries, part headers and the `options` part on top
/// of the upload cap.
const ENVELOPE_BYTES: usize = 64 * 1024;

/// How far past the limit an oversized body is still read and discarded.
const DRAIN_BYTES: usize = 64 * 1024 * 1024;

/// Shared service state. Requests take an `Arc` snapshot of the analyzer, so
/// replacing it never disturbs requests already in flight.
pub struct AppState {
    analyzer: RwLock<Arc<Analyzer>>,
}

impl AppState {
    pub fn new(analyzer: Analyzer) -> Arc<Self> {
        Arc::new(AppState {
            analyzer: RwLock::new(Arc::new(analyzer)),
        })
    }

    pub fn snapshot(&self) -> Arc<Analyzer> {
        self.analyzer.read().unwrap_or_else(|p| p.into_inner()).clone()
    }

    /// Swaps in a freshly loaded analyzer.
    pub fn replace(&self, analyzer: Analyzer) {
        *self.analyzer.write().unwrap_or_else(|p| p.into_inner()) = Arc::new(analyzer);
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/extractors", get(extractors))
        .route("/models", get(models))
        .route("/analyze", post(analyze))
        .layer(DefaultBodyLimit::disable())
        .with_state(state)
}

/// Serves on `listener` until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    state: Arc<AppState>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.code.status()).expect("valid status");
        json_response(status, self.body())
    }
}

fn json_response(status: StatusCode, body: String) -> Response {
    let mut response = (status, body).into_response();
    response
        .headers_mut()
        .insert(CONTENT_TYPE, HeaderValue::from_static("application/json"));
    response
}

async fn health(State(state): State<Arc<AppState>>) -> Json<Health> {
    Json(Health {
        status: "ok".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        extractors_ready: state.snapshot().registry.ready_count(),
    })
}

async fn extractors(State(state): State<Arc<AppState>>) -> Json<Vec<ExtractorDescriptor>> {
    Json(state.snapshot().registry.list())
}

async fn models(State(state): State<Arc<AppState>>) -> Json<Vec<ModelInfo>> {
    Json(state.snapshot().models.clone())
}

enum Job {
    Text(String, AnalyzeOptions),
    File(String, Bytes, AnalyzeOptions),
}

fn malformed(message: impl Into<String>) -> ApiError {
    ApiError::new(ErrorCode::MalformedRequest, message)
}

fn too_large(limit: usize) -> ApiError {
    ApiError::new(
        ErrorCode::PayloadTooLarge,
        format!("request exceeds the upload limit of {limit} bytes"),
    )
}

/// Reads at most `limit` bytes. Anything beyond is drained (up to
/// [`DRAIN_BYTES`] more) so the client can still read the rejection; `None`
/// signals an oversized body.
async fn read_body(mut body: Body, limit: usize) -> Result<Bytes, Option<ApiError>> {
    let mut buffer = Vec::new();
    let mut seen = 0usize;
    while let Some(frame) = body.frame().await {
        let frame = frame.map_err(|_| Some(malformed("could not read request body")))?;
        if let Ok(data) = frame.into_data() {
            seen = seen.saturating_add(data.len());
            if seen <= limit {
                buffer.extend_from_slice(&data);
            } else if seen > limit.saturating_add(DRAIN_BYTES) {
                break;
            }
        }
    }
    if seen > limit {
        return Err(None);
    }
    Ok(buffer.into())
}

fn options(request: AnalyzeRequest) -> Result<AnalyzeOptions, ApiError> {
    if request.max_token_distance == Some(0) {
        return Err(malformed("max_token_distance must be positive"));
    }
    Ok(AnalyzeOptions {
        extractor_id: request.extractor_id,
        include_non_rel: request.include_non_rel,
        max_token_distance: request.max_token_distance,
    })
}

fn parse_request(bytes: &[u8]) -> Result<AnalyzeRequest, ApiError> {
    serde_json::from_slice(bytes).map_err(|e| malformed(format!("invalid analyze request: {e}")))
}

async fn analyze(State(state): State<Arc<AppState>>, request: Request) -> Response {
    match run_analyze(state, request).await {
        Ok(body) => json_response(StatusCode::OK, body),
        Err(e) => e.into_response(),
    }
}

async fn run_analyze(state: Arc<AppState>, request: Request) -> Result<String, ApiError> {
    let analyzer = state.snapshot();
    let cap = analyzer.ingest.max_bytes;
    let limit = cap.saturating_add(ENVELOPE_BYTES);
    let (parts, body) = request.into_parts();

    let declared = parts
        .headers
        .get(CONTENT_LENGTH)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.parse::<usize>().ok());
    if declared.is_some_and(|n| n > limit.saturating_add(DRAIN_BYTES)) {
        return Err(too_large(cap));
    }
    let bytes = read_body(body, limit)
        .await
        .map_err(|e| e.unwrap_or_else(|| too_large(cap)))?;

    let content_type = parts
        .headers
        .get(CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .unwrap_or("")
        .to_ascii_lowercase();
    let job = if content_type.starts_with("multipart/form-data") {
        let request = Request::from_parts(parts, Body::from(bytes));
        let multipart = Multipart::from_request(request, &())
            .await
            .map_err(|e| malformed(format!("invalid multipart body: {e}")))?;
        read_multipart(multipart).await?
    } else if content_type.is_empty() || content_type.starts_with("application/json") {
        let request = parse_request(&bytes)?;
        let text = request
            .text
            .clone()
            .ok_or_else(|| malformed("`text` is required; upload files as multipart/form-data"))?;
        if text.len() > cap {
            return Err(too_large(cap));
        }
        Job::Text(text, options(request)?)
    } else {
        return Err(malformed(format!(
            "unsupported content type `{content_type}`; send application/json or multipart/form-data"
        )));
    };

    let result = tokio::task::spawn_blocking(move || match job {
        Job::Text(text, options) => analyzer.analyze(&text, Source::Manual, &options),
        Job::File(name, bytes, options) => analyzer.analyze_file(&name, &bytes, &options),
    })
    .await
    .expect("analysis task panicked")?;
    Ok(wire::to_json(&result))
}

async fn read_multipart(mut multipart: Multipart) -> Result<Job, ApiError> {
    let mut file: Option<(String, Bytes)> = None;
    let mut request: Option<AnalyzeRequest> = None;
    while let Some(field) = multipart
        .next_field()
        .await
        .map_err(|e| malformed(format!("invalid multipart body: {e}")))?
    {
        let name = field.name().unwrap_or_default().to_string();
        match name.as_str() {
            "file" if file.is_none() => {
                let filename = field
                    .file_name()
                    .map(str::to_string)
                    .ok_or_else(|| malformed("the `file` part needs a filename"))?;
                let bytes = field
                    .bytes()
                    .await
                    .map_err(|e| malformed(format!("invalid file part: {e}")))?;
                file = Some((filename, bytes));
            }
            "options" if request.is_none() => {
                let bytes = field
                    .bytes()
                    .await
                    .map_err(|e| malformed(format!("invalid options part: {e}")))?;
                request = Some(parse_request(&bytes)?);
            }
            "file" | "options" => return Err(malformed(format!("duplicate `{name}` part"))),
            other => return Err(malformed(format!("unexpected part `{other}`"))),
        }
    }
    let request = request.ok_or_else(|| malformed("missing `options` part"))?;
    match (file, request.text.clone()) {
        (Some((name, bytes)), None) => Ok(Job::File(name, bytes, options(request)?)),
        (None, Some(text)) => Ok(Job::Text(text, options(request)?)),
        (Some(_), Some(_)) => Err(malformed("send either `text` or a file, not both")),
        (None, None) => Err(malformed("missing `file` part")),
    }
}
