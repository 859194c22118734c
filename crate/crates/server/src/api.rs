use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};

use terraword_core::simulation::{Applied, Command, GameAssets, GameConfig, Outcome, Task};
use terraword_core::snapshot::StateSnapshot;
use terraword_core::telemetry::PromptLog;
use terraword_core::terraform::{Generators, TerraformReceipt};
use terraword_core::tilemap::{Cell, WORLD_SIZE};

use crate::error::ApiError;
use crate::session::{session_dirs, Session, SessionMeta};

/// Largest `n` accepted by one tick request.
pub const MAX_TICKS_PER_REQUEST: u64 = 100_000;
/// Real-time sessions write a `sync` line this often.
const REALTIME_SYNC_EVERY: u64 = 50;

pub struct AppState {
    sessions: RwLock<HashMap<String, Arc<Session>>>,
    generators: Arc<Generators>,
    assets: GameAssets,
    data_dir: Option<PathBuf>,
    prompt_log: Option<Mutex<PromptLog>>,
}

impl AppState {
    /// Server state; with a data dir, sessions persist there and prompts are
    /// appended to `prompts.log`.
    pub fn new(generators: Generators, assets: GameAssets, data_dir: Option<PathBuf>) -> Result<Self, ApiError> {
        let prompt_log = match &data_dir {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                Some(Mutex::new(
                    PromptLog::open(&dir.join("prompts.log")).map_err(|e| ApiError::Storage(e.to_string()))?,
                ))
            }
            None => None,
        };
        Ok(AppState {
            sessions: RwLock::new(HashMap::new()),
            generators: Arc::new(generators),
            assets,
            data_dir,
            prompt_log,
        })
    }

    /// Reloads every session persisted in the data dir; returns their ids.
    pub fn recover(&self) -> Result<Vec<String>, ApiError> {
        let Some(dir) = &self.data_dir else { return Ok(Vec::new()) };
        let mut ids = Vec::new();
        for path in session_dirs(dir)? {
            let session = Arc::new(Session::recover(&path, &self.assets)?);
            ids.push(session.id.clone());
            self.insert(session);
        }
        Ok(ids)
    }

    fn insert(&self, session: Arc<Session>) {
        self.sessions.write().unwrap_or_else(|p| p.into_inner()).insert(session.id.clone(), session);
    }

    pub fn session(&self, id: &str) -> Result<Arc<Session>, ApiError> {
        self.sessions
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::UnknownSession(id.to_string()))
    }

    pub fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.sessions.read().unwrap_or_else(|p| p.into_inner()).keys().cloned().collect();
        ids.sort();
        ids
    }

    fn create_session(&self, seed: u64, config: GameConfig, realtime: bool) -> Result<Arc<Session>, ApiError> {
        config.validate()?;
        let id = uuid::Uuid::new_v4().simple().to_string();
        let created_at = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let meta = SessionMeta { seed, config, realtime, created_at };
        let dir = self.data_dir.as_ref().map(|d| d.join("sessions").join(&id));
        let session = Arc::new(Session::create(id, meta, &self.assets, dir.as_deref())?);
        self.insert(session.clone());
        Ok(session)
    }

    fn record_prompt(&self, receipt: &TerraformReceipt) -> Result<(), ApiError> {
        if let Some(log) = &self.prompt_log {
            log.lock().unwrap_or_else(|p| p.into_inner()).record(receipt).map_err(|e| ApiError::Storage(e.to_string()))?;
        }
        Ok(())
    }
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::InvalidRequest(format!("bad request body: {e}")))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateRequest {
    seed: Option<u64>,
    #[serde(default)]
    config: GameConfig,
    #[serde(default)]
    realtime: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TerraformRequest {
    grid_index: usize,
    words: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CommandRequest {
    villager_id: u32,
    task: String,
    #[serde(default)]
    args: Value,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TickRequest {
    n: u64,
}

/// Builds a task from its verb and `args` object.
pub fn task_from_request(verb: &str, args: &Value) -> Result<Task, ApiError> {
    let int = |key: &str| {
        args.get(key)
            .and_then(Value::as_u64)
            .ok_or_else(|| ApiError::InvalidRequest(format!("{verb} needs a non-negative integer \"{key}\" argument")))
    };
    let cell = || -> Result<Cell, ApiError> {
        let (x, y) = (int("x")?, int("y")?);
        if x >= WORLD_SIZE as u64 || y >= WORLD_SIZE as u64 {
            return Err(ApiError::InvalidRequest(format!("cell ({x}, {y}) is outside the world")));
        }
        Ok(Cell::new(x as usize, y as usize))
    };
    Ok(match verb {
        "idle" => Task::Idle,
        "move" => Task::MoveTo { target: cell()? },
        "chop" => Task::Chop { cell: cell()? },
        "collect" => Task::Collect { cell: cell()? },
        "attack" => Task::Attack {
            monster_id: u32::try_from(int("monster_id")?)
                .map_err(|_| ApiError::InvalidRequest("monster_id out of range".into()))?,
        },
        other => return Err(ApiError::InvalidRequest(format!("unknown task {other:?}"))),
    })
}

async fn create(State(app): State<Arc<AppState>>, body: Bytes) -> Result<(StatusCode, Json<Value>), ApiError> {
    let req: CreateRequest = if body.is_empty() {
        CreateRequest { seed: None, config: GameConfig::default(), realtime: false }
    } else {
        parse_body(&body)?
    };
    let seed = req.seed.unwrap_or_else(rand_seed);
    let session = app.create_session(seed, req.config, req.realtime)?;
    if req.realtime {
        tokio::spawn(realtime_loop(session.clone()));
    }
    Ok((StatusCode::CREATED, Json(json!({ "session_id": session.id, "seed": seed }))))
}

fn rand_seed() -> u64 {
    let id = uuid::Uuid::new_v4();
    u64::from_le_bytes(id.as_bytes()[..8].try_into().expect("uuid has 16 bytes"))
}

pub(crate) async fn realtime_loop(session: Arc<Session>) {
    let period = Duration::from_secs_f64(session.tick_seconds());
    let mut interval = tokio::time::interval(period);
    interval.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    let mut ticks = 0u64;
    loop {
        interval.tick().await;
        ticks += 1;
        let s = session.clone();
        let record = ticks % REALTIME_SYNC_EVERY == 0;
        match tokio::task::spawn_blocking(move || s.advance(1, record)).await {
            Ok(Ok((_, Outcome::Ongoing))) => {}
            _ => break,
        }
    }
    let _ = session.advance(0, true);
}

async fn state(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<StateSnapshot>, ApiError> {
    Ok(Json(app.session(&id)?.snapshot().as_ref().clone()))
}

async fn terraform(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<TerraformReceipt>, ApiError> {
    let session = app.session(&id)?;
    let req: TerraformRequest = parse_body(&body)?;
    let app2 = app.clone();
    let receipt = tokio::task::spawn_blocking(move || {
        let command = Command::Terraform { grid_index: req.grid_index, words: req.words };
        match session.apply(command, &app2.generators)? {
            Applied::Terraformed(receipt) => Ok::<_, ApiError>(receipt),
            _ => unreachable!("terraform commands yield receipts"),
        }
    })
    .await
    .map_err(|e| ApiError::Storage(e.to_string()))??;
    app.record_prompt(&receipt)?;
    Ok(Json(receipt))
}

async fn command(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let session = app.session(&id)?;
    let req: CommandRequest = parse_body(&body)?;
    let task = task_from_request(&req.task, &req.args)?;
    session.apply(Command::Task { villager_id: req.villager_id, task }, &app.generators)?;
    Ok(Json(json!({ "tick": session.snapshot().tick })))
}

async fn tick(State(app): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> Result<Json<Value>, ApiError> {
    let session = app.session(&id)?;
    let req: TickRequest = parse_body(&body)?;
    if req.n > MAX_TICKS_PER_REQUEST {
        return Err(ApiError::InvalidRequest(format!("n must be at most {MAX_TICKS_PER_REQUEST}")));
    }
    let (tick, outcome) = tokio::task::spawn_blocking(move || session.advance(req.n, true))
        .await
        .map_err(|e| ApiError::Storage(e.to_string()))??;
    Ok(Json(json!({ "tick": tick, "outcome": outcome })))
}

pub fn router(app: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}/state", get(state))
        .route("/sessions/{id}/terraform", post(terraform))
        .route("/sessions/{id}/command", post(command))
        .route("/sessions/{id}/tick", post(tick))
        .with_state(app)
}
