//! HTTP service over a shared store.

use std::collections::HashMap;
use std::net::{SocketAddr, TcpListener as StdListener};
use std::sync::Arc;
use std::thread::JoinHandle;

use axum::body::Bytes;
use axum::extract::multipart::MultipartRejection;
use axum::extract::rejection::QueryRejection;
use axum::extract::{DefaultBodyLimit, Multipart, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chromatwin::acquisition::AcquisitionError;
use chromatwin::gpr::HyperPolicy;
use chromatwin::recipe::Recipe;
use chromatwin::store::{RecordFilter, Store, StoreError};
use chromatwin::vision::{TemplateGeometry, VisionError};
use serde::de::DeserializeOwned;
use tokio::sync::oneshot;

use crate::api::{ErrorBody, ImportResponse, IngestMeta, RecordInput, SuggestRequest};
use crate::ops::{self, OpError};

const BODY_LIMIT: usize = 64 * 1024 * 1024;

/// Settings shared by every request.
#[derive(Debug, Clone, Default)]
pub struct ServiceConfig {
    pub geometry: TemplateGeometry,
    pub hyper: HyperPolicy,
}

#[derive(Clone)]
struct AppState {
    store: Arc<Store>,
    config: Arc<ServiceConfig>,
}

pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, error: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                error: error.into(),
                message: message.into(),
                fields: None,
                found: None,
            },
        }
    }

    fn validation(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "validation", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<OpError> for ApiError {
    fn from(e: OpError) -> Self {
        let msg = e.to_string();
        match e {
            OpError::Store(StoreError::Validation(fields)) => {
                let mut err = ApiError::validation(msg);
                err.body.fields = Some(fields);
                err
            }
            OpError::Store(StoreError::Csv { .. }) | OpError::Invalid(_) => ApiError::validation(msg),
            OpError::Store(_) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "storage", msg),
            OpError::Vision(VisionError::TooFewMarkers { found }) => {
                let mut err = ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "vision", msg);
                err.body.found = Some(found);
                err
            }
            OpError::Vision(VisionError::InvalidGeometry(_)) => {
                ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "vision", msg)
            }
            OpError::Vision(_) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "vision", msg),
            OpError::Model(AcquisitionError::EmptyRecords) => {
                ApiError::new(StatusCode::BAD_REQUEST, "no_records", msg)
            }
            OpError::Model(_) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "model", msg),
        }
    }
}

fn parse_json<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::validation(format!("invalid JSON body: {e}")))
}

async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    F: FnOnce() -> Result<T, OpError> + Send + 'static,
    T: Send + 'static,
{
    match tokio::task::spawn_blocking(f).await {
        Ok(r) => r.map_err(ApiError::from),
        Err(e) => Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "storage", e.to_string())),
    }
}

fn filter_from(q: Result<Query<RecordFilter>, QueryRejection>) -> Result<RecordFilter, ApiError> {
    q.map(|Query(f)| f)
        .map_err(|e| ApiError::validation(format!("invalid filter: {}", e.body_text())))
}

async fn post_records(State(s): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let input: RecordInput = parse_json(&body)?;
    let out = blocking(move || ops::submit(&s.store, input)).await?;
    Ok((StatusCode::CREATED, Json(out)).into_response())
}

async fn get_records(
    State(s): State<AppState>,
    q: Result<Query<RecordFilter>, QueryRejection>,
) -> Result<Response, ApiError> {
    let f = filter_from(q)?;
    Ok(Json(s.store.query(&f)).into_response())
}

async fn post_suggest(State(s): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req: SuggestRequest = parse_json(&body)?;
    let out = blocking(move || ops::suggest(&s.store, &req, &s.config.hyper)).await?;
    Ok(Json(out).into_response())
}

async fn get_export(
    State(s): State<AppState>,
    q: Result<Query<RecordFilter>, QueryRejection>,
) -> Result<Response, ApiError> {
    let f = filter_from(q)?;
    let csv = s.store.export_csv(&f);
    Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], csv).into_response())
}

async fn post_import(State(s): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let text = String::from_utf8(body.to_vec()).map_err(|_| ApiError::validation("CSV body is not UTF-8"))?;
    let count = blocking(move || Ok(s.store.import_csv(&text)?)).await?;
    Ok(Json(ImportResponse { count }).into_response())
}

fn ingest_meta(fields: &HashMap<String, String>) -> Result<IngestMeta, ApiError> {
    let recipe = match fields.get("recipe") {
        Some(text) => text.parse::<Recipe>().map_err(|e| ApiError::validation(e.to_string()))?,
        None => {
            let mut counts = [0u32; 4];
            for (slot, name) in counts.iter_mut().zip(["red", "yellow", "blue", "green"]) {
                let v = fields
                    .get(name)
                    .ok_or_else(|| ApiError::validation(format!("missing field {name}")))?;
                *slot = v
                    .trim()
                    .parse()
                    .map_err(|_| ApiError::validation(format!("{name}: not a drop count: {v:?}")))?;
            }
            Recipe::from_counts(counts)
        }
    };
    let contributor = fields
        .get("contributor")
        .cloned()
        .ok_or_else(|| ApiError::validation("missing field contributor"))?;
    Ok(IngestMeta {
        recipe,
        contributor,
        institution: fields.get("institution").cloned().unwrap_or_default(),
        campaign_tag: fields.get("campaign_tag").filter(|t| !t.is_empty()).cloned(),
    })
}

async fn post_ingest(
    State(s): State<AppState>,
    mp: Result<Multipart, MultipartRejection>,
) -> Result<Response, ApiError> {
    let mut mp = mp.map_err(|e| ApiError::validation(e.body_text()))?;
    let mut image: Option<Bytes> = None;
    let mut fields = HashMap::new();
    while let Some(field) = mp
        .next_field()
        .await
        .map_err(|e| ApiError::validation(e.body_text()))?
    {
        let name = field.name().unwrap_or_default().to_string();
        let data = field.bytes().await.map_err(|e| ApiError::validation(e.body_text()))?;
        if name == "image" {
            image = Some(data);
        } else {
            let text = String::from_utf8(data.to_vec())
                .map_err(|_| ApiError::validation(format!("field {name} is not UTF-8")))?;
            fields.insert(name, text);
        }
    }
    let image = image.ok_or_else(|| ApiError::validation("missing field image"))?;
    let meta = ingest_meta(&fields)?;
    let out = blocking(move || ops::ingest(&s.store, &s.config.geometry, &image, meta)).await?;
    Ok((StatusCode::CREATED, Json(out)).into_response())
}

pub fn router(store: Arc<Store>, config: ServiceConfig) -> Router {
    let state = AppState {
        store,
        config: Arc::new(config),
    };
    Router::new()
        .route("/records", post(post_records).get(get_records))
        .route("/ingest", post(post_ingest))
        .route("/suggest", post(post_suggest))
        .route("/export.csv", get(get_export))
        .route("/import", post(post_import))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(state)
}

/// Binds synchronously so that a bad address fails before anything is spawned.
pub fn bind(addr: &str) -> std::io::Result<StdListener> {
    let listener = StdListener::bind(addr)?;
    listener.set_nonblocking(true)?;
    Ok(listener)
}

/// Serves until `shutdown` resolves.
pub async fn serve_until(
    listener: StdListener,
    app: Router,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::from_std(listener)?;
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}

/// A service running on a background thread; stops when dropped.
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<std::io::Result<()>>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

/// Starts the service on `addr` (use port 0 for an ephemeral port).
pub fn spawn_server(store: Arc<Store>, config: ServiceConfig, addr: &str) -> std::io::Result<ServerHandle> {
    let listener = bind(addr)?;
    let local = listener.local_addr()?;
    let rt = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()?;
    let (tx, rx) = oneshot::channel::<()>();
    let app = router(store, config);
    let thread = std::thread::spawn(move || {
        rt.block_on(serve_until(listener, app, async {
            let _ = rx.await;
        }))
    });
    Ok(ServerHandle {
        addr: local,
        stop: Some(tx),
        thread: Some(thread),
    })
}
