//! Local HTTP API for live editing of a toy generator along a direction set.
//!
//! One session per process: a base code `z`, the last requested slider
//! offsets, and a file of per-direction annotations. Renders read a snapshot
//! of `z` and never mutate it.

mod annotations;

use std::future::Future;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use sefa_core::{rng, AttributeVector, DirectionSet, ToyGenerator, Vector};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;
use tower_http::cors::{AllowOrigin, CorsLayer};
use tower_http::services::ServeDir;

pub use annotations::{Annotation, AnnotationStore};

pub const DEFAULT_PORT: u16 = 8641;
/// Largest accepted `|α|` per slider.
pub const ALPHA_BOUND: f64 = 10.0;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("directions have latent dimension {directions} but the generator has {generator}")]
    DimMismatch { generator: usize, directions: usize },
    #[error("annotations file {path}: {message}")]
    Annotations { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Session {
    pub z: Vec<f64>,
    pub offsets: Vec<f64>,
}

struct Inner {
    generator: ToyGenerator,
    directions: DirectionSet,
    seed: u64,
    session: RwLock<SessionState>,
    annotations: Mutex<AnnotationStore>,
}

struct SessionState {
    z: Vector,
    offsets: Vec<f64>,
    draws: u64,
}

/// Shared handle to the session; cheap to clone.
#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    /// Starts a session with `z` drawn from `seed` and annotations loaded
    /// from `annotations_path` if it exists.
    pub fn new(
        generator: ToyGenerator,
        directions: DirectionSet,
        annotations_path: impl Into<PathBuf>,
        seed: u64,
    ) -> Result<Self, ServiceError> {
        if directions.latent_dim() != generator.latent_dim() {
            return Err(ServiceError::DimMismatch {
                generator: generator.latent_dim(),
                directions: directions.latent_dim(),
            });
        }
        let z = rng::latent(&mut rng::seeded(seed), generator.latent_dim());
        let k = directions.k();
        Ok(Self(Arc::new(Inner {
            annotations: Mutex::new(AnnotationStore::open(annotations_path)?),
            session: RwLock::new(SessionState {
                z,
                offsets: vec![0.0; k],
                draws: 0,
            }),
            generator,
            directions,
            seed,
        })))
    }

    pub fn generator(&self) -> &ToyGenerator {
        &self.0.generator
    }

    pub fn directions(&self) -> &DirectionSet {
        &self.0.directions
    }

    pub fn session(&self) -> Session {
        let s = self.0.session.read().unwrap();
        Session {
            z: s.z.as_slice().to_vec(),
            offsets: s.offsets.clone(),
        }
    }

    /// Replaces `z` with a fresh draw and zeroes the offsets. Without a seed
    /// the draw comes from the next stream of the session seed.
    pub fn resample(&self, seed: Option<u64>) -> Vector {
        let d = self.0.generator.latent_dim();
        let mut s = self.0.session.write().unwrap();
        s.z = match seed {
            Some(seed) => rng::latent(&mut rng::seeded(seed), d),
            None => {
                s.draws += 1;
                rng::latent(&mut rng::stream(self.0.seed, s.draws), d)
            }
        };
        s.offsets.iter_mut().for_each(|a| *a = 0.0);
        s.z.clone()
    }

    /// `z + Σ αᵢ nᵢ` against a consistent snapshot of `z`; records the
    /// offsets as the session's latest slider state.
    fn edited_code(&self, offsets: &[f64]) -> Vector {
        let z = {
            let mut s = self.0.session.write().unwrap();
            s.offsets.copy_from_slice(offsets);
            s.z.clone()
        };
        let mut code = z.into_vec();
        for (alpha, n) in offsets.iter().zip(self.0.directions.directions()) {
            for (c, x) in code.iter_mut().zip(n.as_slice()) {
                *c += alpha * x;
            }
        }
        Vector::new(code).expect("finite offsets keep the code finite")
    }
}

/// API error; rendered as `{"error": message}`.
#[derive(Debug)]
struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            message: message.into(),
        }
    }

    fn internal(message: impl ToString) -> Self {
        Self {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            message: message.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

#[derive(Deserialize)]
struct OffsetsBody {
    offsets: Vec<f64>,
}

#[derive(Deserialize, Default)]
struct ResampleBody {
    seed: Option<u64>,
}

#[derive(Deserialize)]
struct OffsetsQuery {
    offsets: Option<String>,
}

fn check_offsets(offsets: Vec<f64>, k: usize) -> Result<Vec<f64>, ApiError> {
    if offsets.len() != k {
        return Err(ApiError {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            message: format!("expected {k} offsets, got {}", offsets.len()),
        });
    }
    if let Some((i, a)) = offsets
        .iter()
        .enumerate()
        .find(|(_, a)| !(a.is_finite() && a.abs() <= ALPHA_BOUND))
    {
        return Err(ApiError::bad_request(format!(
            "offset {i} is {a}; each offset must lie in [-{ALPHA_BOUND}, {ALPHA_BOUND}]"
        )));
    }
    Ok(offsets)
}

fn offsets_from_body(body: &[u8], k: usize) -> Result<Vec<f64>, ApiError> {
    let parsed: OffsetsBody = serde_json::from_slice(body)
        .map_err(|e| ApiError::bad_request(format!("malformed body: {e}")))?;
    check_offsets(parsed.offsets, k)
}

fn offsets_from_query(text: Option<&str>, k: usize) -> Result<Vec<f64>, ApiError> {
    let offsets = match text {
        None | Some("") => vec![0.0; k],
        Some(text) => text
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| ApiError::bad_request(format!("offset {s:?} is not a number")))
            })
            .collect::<Result<_, _>>()?,
    };
    check_offsets(offsets, k)
}

async fn meta(State(state): State<AppState>) -> Json<serde_json::Value> {
    let ds = state.directions();
    let (width, height) = state.generator().size();
    Json(json!({
        "d": ds.latent_dim(),
        "k": ds.k(),
        "eigenvalues": ds.eigenvalues(),
        "labels": (0..ds.k()).map(|i| format!("direction_{i}")).collect::<Vec<_>>(),
        "attribute_labels": AttributeVector::LABELS,
        "alpha_bound": ALPHA_BOUND,
        "width": width,
        "height": height,
        "method": ds.source().method,
    }))
}

async fn session(State(state): State<AppState>) -> Json<Session> {
    Json(state.session())
}

async fn resample(State(state): State<AppState>, body: Bytes) -> Result<Json<serde_json::Value>, ApiError> {
    let request: ResampleBody = if body.iter().all(u8::is_ascii_whitespace) {
        ResampleBody::default()
    } else {
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(format!("malformed body: {e}")))?
    };
    let z = state.resample(request.seed);
    Ok(Json(json!({ "z": z.as_slice() })))
}

async fn render(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let offsets = offsets_from_body(&body, state.directions().k())?;
    let png = tokio::task::spawn_blocking(move || {
        let code = state.edited_code(&offsets);
        state.generator().render(&code)?.to_png()
    })
    .await
    .map_err(ApiError::internal)?
    .map_err(ApiError::internal)?;
    Ok(([(header::CONTENT_TYPE, "image/png")], png).into_response())
}

fn attributes_for(state: &AppState, offsets: &[f64]) -> Result<Json<serde_json::Value>, ApiError> {
    let code = state.edited_code(offsets);
    let y = state.generator().project(&code).map_err(ApiError::internal)?;
    let attrs = AttributeVector::from_projected(y.as_slice());
    let mut value = serde_json::to_value(attrs).map_err(ApiError::internal)?;
    value["debug"] = json!({ "y": y.as_slice(), "offsets": offsets });
    Ok(Json(value))
}

async fn attributes_get(
    State(state): State<AppState>,
    Query(query): Query<OffsetsQuery>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let offsets = offsets_from_query(query.offsets.as_deref(), state.directions().k())?;
    attributes_for(&state, &offsets)
}

async fn attributes_post(State(state): State<AppState>, body: Bytes) -> Result<Json<serde_json::Value>, ApiError> {
    let offsets = offsets_from_body(&body, state.directions().k())?;
    attributes_for(&state, &offsets)
}

async fn annotations_get(State(state): State<AppState>) -> Json<serde_json::Value> {
    let store = state.0.annotations.lock().unwrap();
    Json(serde_json::to_value(store.entries()).expect("annotations serialize"))
}

async fn annotations_put(
    State(state): State<AppState>,
    UrlPath(index): UrlPath<String>,
    body: Bytes,
) -> Result<StatusCode, ApiError> {
    let k = state.directions().k();
    let index = match index.parse::<usize>() {
        Ok(i) if i < k => i,
        _ => {
            return Err(ApiError {
                status: StatusCode::NOT_FOUND,
                message: format!("no direction {index:?}; valid indices are 0..{k}"),
            })
        }
    };
    let annotation: Annotation = serde_json::from_slice(&body)
        .map_err(|e| ApiError::bad_request(format!("malformed body: {e}")))?;
    tokio::task::spawn_blocking(move || state.0.annotations.lock().unwrap().put(index, annotation))
        .await
        .map_err(ApiError::internal)?
        .map_err(ApiError::internal)?;
    Ok(StatusCode::NO_CONTENT)
}

fn is_local_origin(origin: &HeaderValue) -> bool {
    let Ok(origin) = origin.to_str() else {
        return false;
    };
    let Some(rest) = origin
        .strip_prefix("http://")
        .or_else(|| origin.strip_prefix("https://"))
    else {
        return false;
    };
    let host = if rest.starts_with('[') {
        rest.split_inclusive(']').next().unwrap_or(rest)
    } else {
        rest.split(':').next().unwrap_or(rest)
    };
    matches!(host, "localhost" | "127.0.0.1" | "[::1]")
}

/// Builds the API router. When `static_dir` is given, other paths are served
/// from it (the browser UI bundle).
pub fn router(state: AppState, static_dir: Option<&Path>) -> Router {
    let cors = CorsLayer::new()
        .allow_origin(AllowOrigin::predicate(|origin, _| is_local_origin(origin)))
        .allow_methods([Method::GET, Method::POST, Method::PUT])
        .allow_headers([header::CONTENT_TYPE]);
    let api = Router::new()
        .route("/api/meta", get(meta))
        .route("/api/session", get(session))
        .route("/api/resample", post(resample))
        .route("/api/render", post(render))
        .route("/api/attributes", get(attributes_get).post(attributes_post))
        .route("/api/annotations", get(annotations_get))
        .route("/api/annotations/{index}", put(annotations_put))
        .with_state(state);
    let app = match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    };
    app.layer(cors)
}

/// Serves `app` on `listener` until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    app: Router,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}
