//! Read-only HTTP service over a loaded [`Dataset`]: classified burden
//! surfaces as GeoJSON, per-school audit rows, cross-scale and demographic
//! reports, and the dashboard's static files under `/`.
//!
//! Responses are computed on first request and cached by parameter tuple,
//! so repeated requests get byte-identical bodies.

use std::collections::HashMap;
use std::future::Future;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::extract::rejection::QueryRejection;
use axum::extract::{Query, State};
use axum::http::{header, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use proxburden::classify::{ClassifyError, Method};
use proxburden::engine::RunError;
use proxburden::ingest::{ExposureUnit, HazardKind, Scale};
use proxburden::output::{burden_geojson, report_json, schools_json, to_json};
use proxburden::{par, Dataset, Parallelism, RunRequest};
use serde::Serialize;
use tower_http::services::ServeDir;

/// Error body shared by every failing response.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorBody {
    pub code: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, body: ErrorBody { code, message: message.into() } }
    }

    fn bad(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    fn not_found(path: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", format!("no resource at {path}"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<RunError> for ApiError {
    fn from(e: RunError) -> Self {
        let msg = e.to_string();
        match e {
            RunError::UnknownLayer(_) => Self::bad("unknown_layer", msg),
            RunError::InvalidParameter(_) => Self::bad("invalid_parameter", msg),
            RunError::ScaleUnavailable(_) => Self::new(StatusCode::CONFLICT, "scale_unavailable", msg),
            RunError::Classify(ClassifyError::TooManyClasses { .. }) => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "too_many_classes", msg)
            }
            RunError::Classify(_) => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "unclassifiable", msg),
            RunError::Burden(_) => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", msg),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Endpoint {
    Burden,
    Schools,
    Maup,
    Demographics,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct CacheKey {
    endpoint: Endpoint,
    layer: String,
    radius_bits: u64,
    scale: Scale,
    method: Method,
    k: usize,
}

pub struct AppState {
    dataset: Dataset,
    static_dir: Option<PathBuf>,
    threads: Option<usize>,
    mode: Parallelism,
    catalog: String,
    cache: RwLock<HashMap<CacheKey, Arc<String>>>,
}

impl AppState {
    /// `threads` sizes the compute pool (`None` = one worker per core).
    pub fn new(dataset: Dataset, static_dir: Option<PathBuf>, threads: Option<usize>) -> Self {
        let catalog = to_json(&Catalog::of(&dataset));
        AppState {
            dataset,
            static_dir,
            threads,
            mode: Parallelism::Parallel,
            catalog,
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    /// Number of cached response bodies.
    pub fn cached(&self) -> usize {
        self.cache.read().expect("cache lock").len()
    }

    fn render(&self, endpoint: Endpoint, req: &RunRequest) -> Result<String, RunError> {
        let ds = &self.dataset;
        par::with_threads(self.threads, || match endpoint {
            Endpoint::Burden => Ok(burden_geojson(ds, &ds.run(req, self.mode)?)),
            Endpoint::Schools => Ok(schools_json(&ds.score(&req.layer, req.radius_m, req.scale, self.mode)?.0)),
            Endpoint::Maup => Ok(report_json("maup", req, &ds.maup(req, self.mode)?)),
            Endpoint::Demographics => Ok(report_json("demographics", req, &ds.demographics(req, self.mode)?)),
        })
    }
}

#[derive(Serialize)]
struct LayerInfo<'a> {
    id: &'a str,
    title: &'a str,
    kind: HazardKind,
    exposure_unit: ExposureUnit,
    n_features: usize,
}

#[derive(Serialize)]
struct ZoneSetInfo {
    scale: Scale,
    n_zones: usize,
}

#[derive(Serialize)]
struct Catalog<'a> {
    layers: Vec<LayerInfo<'a>>,
    zone_sets: Vec<ZoneSetInfo>,
    n_schools: usize,
    defaults: &'a proxburden::config::Defaults,
    methods: [&'static str; 2],
}

impl<'a> Catalog<'a> {
    fn of(ds: &'a Dataset) -> Self {
        Catalog {
            layers: ds
                .layers
                .iter()
                .map(|l| LayerInfo {
                    id: &l.id,
                    title: &l.title,
                    kind: l.kind,
                    exposure_unit: l.exposure_unit(),
                    n_features: l.features.len(),
                })
                .collect(),
            zone_sets: ds.zone_sets.iter().map(|z| ZoneSetInfo { scale: z.scale, n_zones: z.zones.len() }).collect(),
            n_schools: ds.schools.len(),
            defaults: &ds.defaults,
            methods: [Method::NaturalBreaks.as_str(), Method::Quantile.as_str()],
        }
    }
}

type Params = Result<Query<HashMap<String, String>>, QueryRejection>;

fn parse_request(state: &AppState, params: Params) -> Result<RunRequest, ApiError> {
    let Query(q) = params.map_err(|e| ApiError::bad("invalid_query", e.body_text()))?;
    let defaults = &state.dataset.defaults;
    let layer = q
        .get("layer")
        .filter(|s| !s.is_empty())
        .ok_or_else(|| ApiError::bad("missing_parameter", "query parameter \"layer\" is required"))?;
    let radius_m = match q.get("radius_m") {
        None => defaults.radius_m,
        Some(s) => s
            .parse::<f64>()
            .map_err(|_| ApiError::bad("invalid_parameter", format!("radius_m {s:?} is not a number")))?,
    };
    let scale = match q.get("scale") {
        None => Scale::CommunityArea,
        Some(s) => s.parse::<Scale>().map_err(|e| ApiError::bad("unknown_scale", e))?,
    };
    let method = match q.get("method") {
        None => defaults.method,
        Some(s) => s.parse::<Method>().map_err(|e| ApiError::bad("invalid_parameter", e))?,
    };
    let k = match q.get("k") {
        None => defaults.k,
        Some(s) => s
            .parse::<usize>()
            .map_err(|_| ApiError::bad("invalid_parameter", format!("k {s:?} is not a positive integer")))?,
    };
    Ok(RunRequest { layer: layer.clone(), radius_m, scale, method, k })
}

fn cache_key(endpoint: Endpoint, req: &RunRequest) -> CacheKey {
    // Parameters an endpoint ignores are normalised so they share entries.
    let (scale, method, k) = match endpoint {
        Endpoint::Schools => (req.scale, Method::NaturalBreaks, 0),
        Endpoint::Maup => (Scale::CommunityArea, req.method, req.k),
        Endpoint::Burden | Endpoint::Demographics => (req.scale, req.method, req.k),
    };
    CacheKey { endpoint, layer: req.layer.clone(), radius_bits: req.radius_m.to_bits(), scale, method, k }
}

fn json_response(content_type: &'static str, body: Arc<String>) -> Response {
    ([(header::CONTENT_TYPE, content_type)], body.as_ref().clone()).into_response()
}

async fn cached(state: Arc<AppState>, endpoint: Endpoint, params: Params) -> Result<Response, ApiError> {
    let req = parse_request(&state, params)?;
    let key = cache_key(endpoint, &req);
    let content_type = match endpoint {
        Endpoint::Burden => "application/geo+json",
        _ => "application/json",
    };
    if let Some(body) = state.cache.read().expect("cache lock").get(&key) {
        return Ok(json_response(content_type, body.clone()));
    }
    // Two requests for the same new tuple may both compute; the bodies are
    // identical so whichever insert lands last is harmless.
    let worker = state.clone();
    let body = tokio::task::spawn_blocking(move || worker.render(endpoint, &req))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    let body = Arc::new(body);
    state.cache.write().expect("cache lock").insert(key, body.clone());
    Ok(json_response(content_type, body))
}

async fn layers(State(state): State<Arc<AppState>>) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], state.catalog.clone()).into_response()
}

async fn burden(State(state): State<Arc<AppState>>, params: Params) -> Result<Response, ApiError> {
    cached(state, Endpoint::Burden, params).await
}

async fn schools(State(state): State<Arc<AppState>>, params: Params) -> Result<Response, ApiError> {
    cached(state, Endpoint::Schools, params).await
}

async fn maup(State(state): State<Arc<AppState>>, params: Params) -> Result<Response, ApiError> {
    cached(state, Endpoint::Maup, params).await
}

async fn demographics(State(state): State<Arc<AppState>>, params: Params) -> Result<Response, ApiError> {
    cached(state, Endpoint::Demographics, params).await
}

async fn not_found(uri: Uri) -> ApiError {
    ApiError::not_found(uri.path())
}

pub fn router(state: Arc<AppState>) -> Router {
    let api = Router::new()
        .route("/api/layers", get(layers))
        .route("/api/burden", get(burden))
        .route("/api/schools", get(schools))
        .route("/api/report/maup", get(maup))
        .route("/api/report/demographics", get(demographics))
        .route("/api/{*rest}", get(not_found))
        .with_state(state.clone());
    match &state.static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir).not_found_service(get(not_found))),
        None => api.fallback(not_found),
    }
}

/// Serves `app` on an already bound listener until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    app: Router,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}
