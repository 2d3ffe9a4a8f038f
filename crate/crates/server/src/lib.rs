//! HTTP wire surface over [`Service`].
//!
//! JSON in, JSON out. Errors are `{code, message}` where `code` is the core
//! error name. All mutations go through one mutex, which is also the log's
//! single writer, so sequence numbers stay dense.

mod config;

use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use crowdtrace_core::registry::{FileVehicleRepository, MemoryVehicleRepository, VehicleRepository};
use crowdtrace_core::service::{Service, ServiceError};
use crowdtrace_core::{AlertId, GeoPoint, Millis, ReporterMode, UnitId, UserId};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{ConfigError, ServerConfig};

pub trait Clock: Send + Sync {
    fn now(&self) -> Millis;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> Millis {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_millis() as Millis)
    }
}

/// A clock that only moves when told to.
#[derive(Debug, Default)]
pub struct ManualClock(AtomicI64);

impl ManualClock {
    pub fn new(t: Millis) -> Self {
        Self(AtomicI64::new(t))
    }

    pub fn set(&self, t: Millis) {
        self.0.store(t, Ordering::SeqCst);
    }

    pub fn advance(&self, ms: Millis) {
        self.0.fetch_add(ms, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now(&self) -> Millis {
        self.0.load(Ordering::SeqCst)
    }
}

#[derive(Clone)]
pub struct AppState {
    service: Arc<Mutex<Service>>,
    clock: Arc<dyn Clock>,
    operator_token: Option<String>,
}

impl AppState {
    pub fn new(service: Service, clock: Arc<dyn Clock>, operator_token: Option<String>) -> Self {
        Self {
            service: Arc::new(Mutex::new(service)),
            clock,
            operator_token,
        }
    }

    pub fn service(&self) -> MutexGuard<'_, Service> {
        // A panic mid-command cannot leave a half-applied event behind.
        self.service.lock().unwrap_or_else(|e| e.into_inner())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                code: code.to_owned(),
                message: message.into(),
            },
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "InvalidRequest", message)
    }
}

fn status_for(code: &str) -> StatusCode {
    match code {
        "Unauthorized" => StatusCode::UNAUTHORIZED,
        "UnknownUser" | "UnknownReporter" | "UnknownAlert" | "UnknownUnit" | "NotFound" => {
            StatusCode::NOT_FOUND
        }
        "DuplicateRegistration" | "InvalidTransition" | "UnitUnavailable" | "StaleTimestamp" => {
            StatusCode::CONFLICT
        }
        "BackendUnavailable" => StatusCode::SERVICE_UNAVAILABLE,
        "Io" | "LogCorrupt" => StatusCode::INTERNAL_SERVER_ERROR,
        _ => StatusCode::BAD_REQUEST,
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        let code = e.code();
        Self::new(status_for(&code), &code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn parse<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(e.to_string()))
}

fn bearer(headers: &HeaderMap) -> Option<&str> {
    headers
        .get(header::AUTHORIZATION)?
        .to_str()
        .ok()?
        .strip_prefix("Bearer ")
}

fn authenticate(svc: &Service, headers: &HeaderMap, user_id: UserId) -> ApiResult<()> {
    let token = bearer(headers).ok_or(ServiceError::Unauthorized)?;
    Ok(svc.authenticate(user_id, token)?)
}

fn authorize_operator(st: &AppState, headers: &HeaderMap) -> ApiResult<()> {
    match &st.operator_token {
        Some(expected) if bearer(headers) != Some(expected.as_str()) => {
            Err(ServiceError::Unauthorized.into())
        }
        _ => Ok(()),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RegisterReq {
    national_id: String,
    mode: ReporterMode,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LocationReq {
    user_id: UserId,
    position: GeoPoint,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct IncidentReq {
    user_id: UserId,
    plate: String,
    #[serde(default)]
    description: String,
    position: GeoPoint,
}

#[derive(Serialize)]
struct IncidentResp {
    alert_id: AlertId,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SightingReq {
    user_id: UserId,
    plate: String,
    position: GeoPoint,
    #[serde(default = "full_confidence")]
    confidence: f64,
}

fn full_confidence() -> f64 {
    1.0
}

#[derive(Deserialize)]
struct PollQuery {
    user_id: UserId,
    #[serde(default)]
    cursor: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DispatchReq {
    alert_id: AlertId,
    /// A unit id, or `"auto"` for the nearest available unit.
    #[serde(default)]
    unit_id: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MessageReq {
    user_id: UserId,
    text: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CloseReq {
    alert_id: AlertId,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct TickReq {
    #[serde(default)]
    now: Option<Millis>,
}

#[derive(Serialize)]
struct TickResp {
    escalated: Vec<AlertId>,
}

async fn register(State(st): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let req: RegisterReq = parse(&body)?;
    let reg = st.service().register(&req.national_id, req.mode, st.clock.now())?;
    Ok((StatusCode::CREATED, Json(reg)).into_response())
}

async fn location(State(st): State<AppState>, headers: HeaderMap, body: Bytes) -> ApiResult<StatusCode> {
    let req: LocationReq = parse(&body)?;
    let mut svc = st.service();
    authenticate(&svc, &headers, req.user_id)?;
    svc.update_location(req.user_id, req.position, st.clock.now())?;
    Ok(StatusCode::NO_CONTENT)
}

async fn incidents(State(st): State<AppState>, headers: HeaderMap, body: Bytes) -> ApiResult<Response> {
    let req: IncidentReq = parse(&body)?;
    let mut svc = st.service();
    authenticate(&svc, &headers, req.user_id)?;
    let alert_id = svc.report_incident(req.user_id, &req.plate, &req.description, req.position, st.clock.now())?;
    Ok((StatusCode::CREATED, Json(IncidentResp { alert_id })).into_response())
}

async fn sightings(State(st): State<AppState>, headers: HeaderMap, body: Bytes) -> ApiResult<Response> {
    let req: SightingReq = parse(&body)?;
    let mut svc = st.service();
    authenticate(&svc, &headers, req.user_id)?;
    let outcome = svc.submit_sighting(req.user_id, &req.plate, req.position, req.confidence, st.clock.now())?;
    Ok(Json(outcome).into_response())
}

async fn alerts(
    State(st): State<AppState>,
    headers: HeaderMap,
    query: Result<Query<PollQuery>, axum::extract::rejection::QueryRejection>,
) -> ApiResult<Response> {
    let Query(q) = query.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let svc = st.service();
    authenticate(&svc, &headers, q.user_id)?;
    Ok(Json(svc.poll(q.user_id, q.cursor)?).into_response())
}

async fn operator_state(State(st): State<AppState>, headers: HeaderMap) -> ApiResult<Response> {
    authorize_operator(&st, &headers)?;
    Ok(Json(st.service().operator_snapshot()).into_response())
}

async fn operator_dispatch(State(st): State<AppState>, headers: HeaderMap, body: Bytes) -> ApiResult<Response> {
    authorize_operator(&st, &headers)?;
    let req: DispatchReq = parse(&body)?;
    let unit = req.unit_id.filter(|u| u != "auto").map(UnitId);
    let outcome = st.service().dispatch(req.alert_id, unit, st.clock.now())?;
    Ok(Json(outcome).into_response())
}

async fn operator_message(State(st): State<AppState>, headers: HeaderMap, body: Bytes) -> ApiResult<StatusCode> {
    authorize_operator(&st, &headers)?;
    let req: MessageReq = parse(&body)?;
    st.service().operator_message(req.user_id, &req.text, st.clock.now())?;
    Ok(StatusCode::NO_CONTENT)
}

async fn operator_close(State(st): State<AppState>, headers: HeaderMap, body: Bytes) -> ApiResult<StatusCode> {
    authorize_operator(&st, &headers)?;
    let req: CloseReq = parse(&body)?;
    st.service().close(req.alert_id, st.clock.now())?;
    Ok(StatusCode::NO_CONTENT)
}

async fn operator_tick(State(st): State<AppState>, headers: HeaderMap, body: Bytes) -> ApiResult<Response> {
    authorize_operator(&st, &headers)?;
    let req: TickReq = if body.is_empty() { TickReq::default() } else { parse(&body)? };
    let now = req.now.unwrap_or_else(|| st.clock.now());
    let escalated = st.service().tick(now)?;
    Ok(Json(TickResp { escalated }).into_response())
}

async fn fallback() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "NotFound", "no such endpoint")
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/v1/register", post(register))
        .route("/api/v1/location", post(location))
        .route("/api/v1/incidents", post(incidents))
        .route("/api/v1/sightings", post(sightings))
        .route("/api/v1/alerts", get(alerts))
        .route("/api/v1/operator/state", get(operator_state))
        .route("/api/v1/operator/dispatch", post(operator_dispatch))
        .route("/api/v1/operator/message", post(operator_message))
        .route("/api/v1/operator/close", post(operator_close))
        .route("/api/v1/operator/tick", post(operator_tick))
        .fallback(fallback)
        .with_state(state)
}

#[derive(Debug, Error)]
pub enum ServerError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Service(#[from] ServiceError),
    #[error("Io: {0}")]
    Io(#[from] std::io::Error),
}

/// Restores the service from `data_dir`, replaying its log.
pub fn open_service(cfg: &ServerConfig) -> Result<Service, ServerError> {
    let grammar = cfg.service.validate()?;
    let vehicles: Arc<dyn VehicleRepository> = match &cfg.vehicles {
        Some(path) => Arc::new(FileVehicleRepository::open(path, &grammar).map_err(ServiceError::from)?),
        None => Arc::new(MemoryVehicleRepository::new([])),
    };
    Ok(Service::open(cfg.service.clone(), vehicles, &cfg.data_dir)?)
}

/// Serves until ctrl-c, then writes a final digest checkpoint.
pub async fn serve(cfg: ServerConfig, clock: Arc<dyn Clock>) -> Result<(), ServerError> {
    let service = open_service(&cfg)?;
    tracing::info!(events = service.last_seq(), digest = %service.digest(), "state restored");
    let state = AppState::new(service, clock, cfg.operator_token.clone());
    let listener = tokio::net::TcpListener::bind(cfg.listen).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state.clone()))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    let mut svc = state.service();
    svc.checkpoint()?;
    tracing::info!(events = svc.last_seq(), digest = %svc.digest(), "stopped");
    Ok(())
}
