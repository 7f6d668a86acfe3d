//! HTTP service exposing the braillecam pipeline and virtual controller
//! sessions over JSON.
//!
//! Stateless endpoints run the pure pipeline per request; controller
//! sessions hold a live virtual embosser each, so multiple senders can
//! stream against independent machines.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};

use braillecam_api::{
    ControllerCreated, ControllerStatus, CreateControllerRequest, DrainResponse, FeedRequest,
    FeedResponse, GcodeRequest, GcodeResponse, Health, JobConfig, LayoutRequest, RoundtripRequest,
    RoundtripResponse, SendRequest, SendResponse, SimulateRequest, SimulateResponse,
    TranslateRequest, TranslateResponse,
};
use braillecam_core::sim::Controller;

mod error;
mod ops;

pub use error::ApiFailure;

#[derive(Clone, Default)]
pub struct AppState {
    inner: Arc<Inner>,
}

#[derive(Default)]
struct Inner {
    controllers: Mutex<HashMap<u64, Controller>>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn new() -> AppState {
        AppState::default()
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/healthz", get(health))
        .route("/v1/config/default", get(default_config))
        .route("/v1/translate", post(translate))
        .route("/v1/layout", post(layout))
        .route("/v1/gcode", post(gcode))
        .route("/v1/simulate", post(simulate))
        .route("/v1/roundtrip", post(roundtrip))
        .route("/v1/send", post(send))
        .route("/v1/controllers", post(create_controller))
        .route(
            "/v1/controllers/{id}",
            get(controller_status).delete(delete_controller),
        )
        .route("/v1/controllers/{id}/feed", post(controller_feed))
        .route("/v1/controllers/{id}/drain", post(controller_drain))
        .route("/v1/controllers/{id}/raster", get(controller_raster))
        .with_state(state)
}

/// Serves on an already-bound listener until the task is dropped.
pub async fn serve(listener: tokio::net::TcpListener) -> std::io::Result<()> {
    axum::serve(listener, router(AppState::new())).await
}

/// Binds and serves on a dedicated thread with its own runtime. Returns the
/// bound address; the thread runs until the process exits. This is how the
/// CLI self-hosts when no remote server is given.
pub fn spawn_server_thread(
    addr: SocketAddr,
) -> std::io::Result<(SocketAddr, std::thread::JoinHandle<()>)> {
    let listener = std::net::TcpListener::bind(addr)?;
    listener.set_nonblocking(true)?;
    let local = listener.local_addr()?;
    let handle = std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_current_thread()
            .enable_all()
            .build()
            .expect("tokio runtime");
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::from_std(listener).expect("tokio listener");
            serve(listener).await.expect("server run");
        });
    });
    Ok((local, handle))
}

fn effective_config(config: Option<JobConfig>) -> Result<JobConfig, ApiFailure> {
    let cfg = config.unwrap_or_default();
    cfg.validate()?;
    Ok(cfg)
}

async fn health() -> Json<Health> {
    Json(Health {
        status: "ok".to_string(),
    })
}

async fn default_config() -> Json<JobConfig> {
    Json(JobConfig::default())
}

async fn translate(
    Json(req): Json<TranslateRequest>,
) -> Result<Json<TranslateResponse>, ApiFailure> {
    let cfg = effective_config(req.config)?;
    Ok(Json(ops::translate(&req.text, &cfg)?))
}

async fn layout(Json(req): Json<LayoutRequest>) -> Result<Json<serde_json::Value>, ApiFailure> {
    let cfg = effective_config(req.config)?;
    let (_, map, _) = ops::lay_out(&req.text, req.mirror, &cfg)?;
    Ok(Json(map.to_json_value()))
}

async fn gcode(Json(req): Json<GcodeRequest>) -> Result<Json<GcodeResponse>, ApiFailure> {
    let cfg = effective_config(req.config)?;
    Ok(Json(ops::gcode(&req.text, req.mirror, &cfg)?))
}

async fn simulate(Json(req): Json<SimulateRequest>) -> Result<Json<SimulateResponse>, ApiFailure> {
    let cfg = effective_config(req.config)?;
    Ok(Json(ops::simulate(&req.program, &cfg)?))
}

async fn roundtrip(
    Json(req): Json<RoundtripRequest>,
) -> Result<Json<RoundtripResponse>, ApiFailure> {
    let cfg = effective_config(req.config)?;
    Ok(Json(ops::roundtrip(&req.text, req.mirror, &cfg)))
}

async fn send(Json(req): Json<SendRequest>) -> Result<Json<SendResponse>, ApiFailure> {
    let cfg = effective_config(req.config)?;
    // The sender loop blocks on simulated I/O; keep it off the async
    // worker.
    let response =
        tokio::task::spawn_blocking(move || ops::send(&req.program, &cfg, req.record_transcript))
            .await
            .map_err(|e| {
                ApiFailure::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())
            })??;
    Ok(Json(response))
}

async fn create_controller(
    State(state): State<AppState>,
    Json(req): Json<CreateControllerRequest>,
) -> Result<Json<ControllerCreated>, ApiFailure> {
    let cfg = effective_config(req.config)?;
    let controller = Controller::new(&cfg.machine)?;
    let id = state.inner.next_id.fetch_add(1, Ordering::Relaxed) + 1;
    let planner_depth = controller.planner_depth();
    state
        .inner
        .controllers
        .lock()
        .unwrap()
        .insert(id, controller);
    Ok(Json(ControllerCreated { id, planner_depth }))
}

fn with_controller<T>(
    state: &AppState,
    id: u64,
    f: impl FnOnce(&mut Controller) -> T,
) -> Result<T, ApiFailure> {
    let mut map = state.inner.controllers.lock().unwrap();
    let controller = map
        .get_mut(&id)
        .ok_or_else(|| ApiFailure::not_found("controller"))?;
    Ok(f(controller))
}

fn status_of(id: u64, c: &Controller) -> ControllerStatus {
    ControllerStatus {
        id,
        received: c.received(),
        free_slots: c.free_slots(),
        occupied_slots: c.occupied_slots(),
        planner_depth: c.planner_depth(),
        overflow_count: c.overflow_count(),
        clock_s: c.state().clock_s,
        x: c.state().x,
        y: c.state().y,
        homed_x: c.state().homed_x,
        homed_y: c.state().homed_y,
        strike_count: c.raster().strikes.len() as u64,
        fault: c.fault().map(str::to_string),
    }
}

async fn controller_status(
    State(state): State<AppState>,
    Path(id): Path<u64>,
) -> Result<Json<ControllerStatus>, ApiFailure> {
    with_controller(&state, id, |c| Json(status_of(id, c)))
}

async fn controller_feed(
    State(state): State<AppState>,
    Path(id): Path<u64>,
    Json(req): Json<FeedRequest>,
) -> Result<Json<FeedResponse>, ApiFailure> {
    let line = req.line.trim_end_matches(['\n', '\r']).to_string();
    with_controller(&state, id, move |c| {
        Json(FeedResponse {
            response: c.feed_line(&line),
        })
    })
}

async fn controller_drain(
    State(state): State<AppState>,
    Path(id): Path<u64>,
) -> Result<Json<DrainResponse>, ApiFailure> {
    with_controller(&state, id, |c| {
        c.run_to_idle();
        Json(DrainResponse {
            clock_s: c.state().clock_s,
            strike_count: c.raster().strikes.len() as u64,
        })
    })
}

async fn controller_raster(
    State(state): State<AppState>,
    Path(id): Path<u64>,
) -> Result<Json<serde_json::Value>, ApiFailure> {
    with_controller(&state, id, |c| Json(c.raster().to_json_value()))
}

async fn delete_controller(
    State(state): State<AppState>,
    Path(id): Path<u64>,
) -> Result<StatusCode, ApiFailure> {
    let removed = state.inner.controllers.lock().unwrap().remove(&id);
    if removed.is_none() {
        return Err(ApiFailure::not_found("controller"));
    }
    Ok(StatusCode::NO_CONTENT)
}
