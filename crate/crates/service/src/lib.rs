//! HTTP and WebSocket host for investigation sessions.
//!
//! Each session sits behind its own async mutex, so commands for one session
//! run one at a time in arrival order while distinct sessions proceed in parallel.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use forensica_core::config::GenConfig;
use forensica_core::error::SessionError;
use forensica_core::generate::generate;
use forensica_core::rng::WorldSeed;
use forensica_core::session::{Command, GameSession, SessionView, Snapshot};
use forensica_core::wire::{Game, WorldBundle, FORMAT_VERSION};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::Mutex;
use uuid::Uuid;

pub const DEFAULT_TTL: Duration = Duration::from_secs(30 * 60);

struct Slot {
    session: GameSession,
    touched: Instant,
}

type SharedSlot = Arc<Mutex<Slot>>;

pub struct Hub {
    sessions: std::sync::Mutex<HashMap<Uuid, SharedSlot>>,
    config: GenConfig,
    ttl: Duration,
}

pub type AppState = Arc<Hub>;

impl Hub {
    pub fn new(config: GenConfig, ttl: Duration) -> AppState {
        Arc::new(Hub { sessions: std::sync::Mutex::new(HashMap::new()), config, ttl })
    }

    pub fn ttl(&self) -> Duration {
        self.ttl
    }

    pub fn len(&self) -> usize {
        self.sessions.lock().expect("session map").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn insert(&self, session: GameSession) -> Uuid {
        let id = Uuid::new_v4();
        let slot = Arc::new(Mutex::new(Slot { session, touched: Instant::now() }));
        self.sessions.lock().expect("session map").insert(id, slot);
        id
    }

    fn get(&self, id: Uuid) -> Option<SharedSlot> {
        self.sessions.lock().expect("session map").get(&id).cloned()
    }

    /// Drops sessions idle for longer than the TTL; returns how many went.
    pub fn sweep(&self) -> usize {
        let now = Instant::now();
        let mut map = self.sessions.lock().expect("session map");
        let before = map.len();
        map.retain(|_, slot| match slot.try_lock() {
            Ok(s) => now.duration_since(s.touched) <= self.ttl,
            Err(_) => true,
        });
        before - map.len()
    }

    /// Locks a live session, refreshing its idle clock. Expired sessions are removed.
    async fn checkout(&self, id: Uuid) -> Result<tokio::sync::OwnedMutexGuard<Slot>, ApiError> {
        let slot = self.get(id).ok_or(ApiError::NotFound)?;
        let mut guard = slot.lock_owned().await;
        if guard.touched.elapsed() > self.ttl {
            drop(guard);
            self.sessions.lock().expect("session map").remove(&id);
            return Err(ApiError::NotFound);
        }
        guard.touched = Instant::now();
        Ok(guard)
    }
}

/// Periodically expires idle sessions.
pub fn spawn_reaper(hub: AppState) -> tokio::task::JoinHandle<()> {
    tokio::spawn(async move {
        let period = (hub.ttl / 4).max(Duration::from_millis(50));
        let mut tick = tokio::time::interval(period);
        loop {
            tick.tick().await;
            let gone = hub.sweep();
            if gone > 0 {
                tracing::info!(expired = gone, "expired idle sessions");
            }
        }
    })
}

#[derive(Debug)]
pub enum ApiError {
    NotFound,
    Session(SessionError),
    BadRequest(String),
    Internal { diagnostic: Uuid, message: String },
}

impl ApiError {
    fn status(&self) -> StatusCode {
        match self {
            ApiError::NotFound => StatusCode::NOT_FOUND,
            ApiError::Session(SessionError::IllegalState(_)) => StatusCode::CONFLICT,
            ApiError::Session(SessionError::InvalidCommand(_)) | ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::Session(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::Internal { .. } => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    fn body(&self) -> serde_json::Value {
        match self {
            ApiError::NotFound => json!({ "error": "not_found", "message": "no such session (it may have expired)" }),
            ApiError::Session(e) => {
                let kind = match e {
                    SessionError::OutOfReach { .. } => "out_of_reach",
                    SessionError::NoTerminal { .. } => "no_terminal",
                    SessionError::NotVisible { .. } => "not_visible",
                    SessionError::IllegalState(_) => "illegal_state",
                    SessionError::InvalidCommand(_) => "invalid_command",
                };
                json!({ "error": kind, "message": e.to_string() })
            }
            ApiError::BadRequest(m) => json!({ "error": "bad_request", "message": m }),
            ApiError::Internal { diagnostic, message } => json!({ "error": "internal", "message": message, "diagnostic": diagnostic.to_string() }),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), Json(self.body())).into_response()
    }
}

/// Seeds may arrive as JSON numbers or as decimal / 0x-hex strings.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum SeedInput {
    Number(u64),
    Text(String),
}

impl SeedInput {
    fn resolve(&self) -> Result<WorldSeed, ApiError> {
        match self {
            SeedInput::Number(n) => Ok(WorldSeed(*n)),
            SeedInput::Text(t) => WorldSeed::parse(t).map_err(|e| ApiError::BadRequest(e.to_string())),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateRequest {
    pub game: Game,
    #[serde(default)]
    pub seed: Option<SeedInput>,
    #[serde(default)]
    pub resume: Option<Snapshot>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CreateResponse {
    pub id: String,
    pub game: Game,
    pub seed: String,
    pub ttl_seconds: u64,
    /// Unix time at which the session expires if left idle.
    pub expires_at: u64,
    pub view: SessionView,
}

/// Saved progress plus the sealed world, enough to resume via `resume`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Export {
    pub format_version: u32,
    pub game: Game,
    pub seed: String,
    pub config_digest: String,
    pub progress: Snapshot,
    pub world: WorldBundle,
}

fn expires_at(ttl: Duration) -> u64 {
    (SystemTime::now() + ttl).duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

async fn create(State(hub): State<AppState>, body: Result<Json<CreateRequest>, axum::extract::rejection::JsonRejection>) -> Result<Json<CreateResponse>, ApiError> {
    let Json(req) = body.map_err(|e| ApiError::BadRequest(e.body_text()))?;
    let seed = match &req.seed {
        Some(s) => s.resolve()?,
        None => WorldSeed(rand::random()),
    };
    let config = hub.config.clone();
    let game = req.game;
    let bundle = tokio::task::spawn_blocking(move || generate(game, seed, &config))
        .await
        .map_err(|e| internal(format!("generation task failed: {e}")))?
        .map_err(|e| internal(format!("generation failed for seed {}: {e}", seed.0)))?;
    let session = match req.resume {
        Some(snap) => GameSession::resume(bundle, snap).map_err(ApiError::Session)?,
        None => GameSession::new(bundle),
    };
    let view = session.view();
    let id = hub.insert(session);
    tracing::info!(%id, game = ?game, seed = seed.0, "session created");
    Ok(Json(CreateResponse { id: id.to_string(), game, seed: seed.0.to_string(), ttl_seconds: hub.ttl.as_secs(), expires_at: expires_at(hub.ttl), view }))
}

fn internal(message: String) -> ApiError {
    let diagnostic = Uuid::new_v4();
    tracing::error!(%diagnostic, "{message}");
    ApiError::Internal { diagnostic, message }
}

fn parse_id(raw: &str) -> Result<Uuid, ApiError> {
    Uuid::parse_str(raw).map_err(|_| ApiError::NotFound)
}

async fn run_command(hub: &Hub, id: Uuid, cmd: Command) -> Result<forensica_core::session::Response, ApiError> {
    let mut slot = hub.checkout(id).await?;
    slot.session.apply(cmd).map_err(ApiError::Session)
}

async fn command(
    State(hub): State<AppState>,
    Path(raw): Path<String>,
    body: Result<Json<Command>, axum::extract::rejection::JsonRejection>,
) -> Result<Json<forensica_core::session::Response>, ApiError> {
    let id = parse_id(&raw)?;
    let Json(cmd) = body.map_err(|e| ApiError::BadRequest(e.body_text()))?;
    Ok(Json(run_command(&hub, id, cmd).await?))
}

async fn export(State(hub): State<AppState>, Path(raw): Path<String>) -> Result<Json<Export>, ApiError> {
    let id = parse_id(&raw)?;
    let slot = hub.checkout(id).await?;
    let b = slot.session.bundle();
    Ok(Json(Export {
        format_version: FORMAT_VERSION,
        game: b.game,
        seed: b.seed.0.to_string(),
        config_digest: b.config_digest.clone(),
        progress: slot.session.snapshot(),
        world: b.without_ground_truth(),
    }))
}

async fn health(State(hub): State<AppState>) -> Json<serde_json::Value> {
    Json(json!({ "status": "ok", "sessions": hub.len() }))
}

async fn live(State(hub): State<AppState>, Path(raw): Path<String>, ws: WebSocketUpgrade) -> Result<Response, ApiError> {
    let id = parse_id(&raw)?;
    hub.get(id).ok_or(ApiError::NotFound)?;
    Ok(ws.on_upgrade(move |socket| channel(hub, id, socket)))
}

fn frame(result: Result<forensica_core::session::Response, ApiError>) -> String {
    match result {
        Ok(r) => json!({ "ok": r }).to_string(),
        Err(e) => json!({ "status": e.status().as_u16(), "error": e.body() }).to_string(),
    }
}

/// One JSON command per text frame in, one response frame out, in order.
async fn channel(hub: AppState, id: Uuid, mut socket: WebSocket) {
    let hello = frame(run_command(&hub, id, Command::Sync {}).await);
    if socket.send(Message::Text(hello.into())).await.is_err() {
        return;
    }
    while let Some(Ok(msg)) = socket.recv().await {
        let reply = match msg {
            Message::Text(t) => match serde_json::from_str::<Command>(&t) {
                Ok(cmd) => frame(run_command(&hub, id, cmd).await),
                Err(e) => frame(Err(ApiError::BadRequest(e.to_string()))),
            },
            Message::Close(_) => break,
            _ => continue,
        };
        if socket.send(Message::Text(reply.into())).await.is_err() {
            break;
        }
    }
}

pub fn router(hub: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/session", post(create))
        .route("/session/{id}/cmd", post(command))
        .route("/session/{id}/export", get(export))
        .route("/session/{id}/live", get(live))
        .with_state(hub)
}
