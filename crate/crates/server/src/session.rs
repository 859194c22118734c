//! Game sessions, their published snapshots, and the on-disk event log.
//!
//! Each session directory holds `session.json` (seed, config, mode), an
//! append-only `events.log` in the command script format, and
//! `receipts.jsonl` with one terraform receipt per line. Recovery replays the
//! event log and feeds the recorded grids back in, so a session comes back
//! bit-identical even when its grids came from a remote model.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};

use terraword_core::simulation::{
    Applied, Command, GameAssets, GameConfig, GameState, Outcome, Script, SetupError, TimedCommand,
};
use terraword_core::snapshot::StateSnapshot;
use terraword_core::terraform::{
    BackendKind, GenerateError, Generator, Generators, LocalGenerator, Prompt, TerraformReceipt,
};
use terraword_core::tilemap::TileGrid;

use crate::error::ApiError;

const META_FILE: &str = "session.json";
const EVENTS_FILE: &str = "events.log";
const RECEIPTS_FILE: &str = "receipts.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMeta {
    pub seed: u64,
    pub config: GameConfig,
    /// Advanced by the server clock rather than by `tick` requests.
    pub realtime: bool,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
}

struct EventLog {
    events: File,
    receipts: File,
}

impl EventLog {
    fn create(dir: &Path, meta: &SessionMeta) -> Result<Self, ApiError> {
        fs::create_dir_all(dir)?;
        let meta = serde_json::to_string_pretty(meta).map_err(|e| ApiError::Storage(e.to_string()))?;
        fs::write(dir.join(META_FILE), meta)?;
        Self::open(dir)
    }

    fn open(dir: &Path) -> Result<Self, ApiError> {
        let append = |name: &str| OpenOptions::new().create(true).append(true).open(dir.join(name));
        Ok(EventLog { events: append(EVENTS_FILE)?, receipts: append(RECEIPTS_FILE)? })
    }

    fn command(&mut self, tick: u64, command: Command) -> Result<(), ApiError> {
        writeln!(self.events, "{}", TimedCommand { tick, command })?;
        Ok(())
    }

    fn receipt(&mut self, receipt: &TerraformReceipt) -> Result<(), ApiError> {
        let line = serde_json::to_string(receipt).map_err(|e| ApiError::Storage(e.to_string()))?;
        writeln!(self.receipts, "{line}")?;
        Ok(())
    }
}

/// Replays one recorded grid during recovery.
struct Recorded {
    grid: TileGrid,
    kind: BackendKind,
}

impl Generator for Recorded {
    fn kind(&self) -> BackendKind {
        self.kind
    }

    fn generate(&self, _prompt: &Prompt, _seed: u64) -> Result<TileGrid, GenerateError> {
        Ok(self.grid)
    }
}

struct Inner {
    game: GameState,
    log: Option<EventLog>,
}

pub struct Session {
    pub id: String,
    pub meta: SessionMeta,
    inner: Mutex<Inner>,
    snapshot: RwLock<Arc<StateSnapshot>>,
}

impl Session {
    fn from_parts(id: String, meta: SessionMeta, game: GameState, log: Option<EventLog>) -> Self {
        let snapshot = RwLock::new(Arc::new(StateSnapshot::capture(&game)));
        Session { id, meta, inner: Mutex::new(Inner { game, log }), snapshot }
    }

    /// Starts a new game, persisting it under `dir` when given.
    pub fn create(id: String, meta: SessionMeta, assets: &GameAssets, dir: Option<&Path>) -> Result<Self, ApiError> {
        let game = GameState::new_game_with(meta.config.clone(), meta.seed, assets).map_err(|e| match e {
            SetupError::Config(c) => ApiError::Config(c),
            SetupError::Words(w) => ApiError::Storage(w.to_string()),
        })?;
        let log = dir.map(|d| EventLog::create(d, &meta)).transpose()?;
        Ok(Self::from_parts(id, meta, game, log))
    }

    /// Rebuilds a persisted session by replaying its event log.
    pub fn recover(dir: &Path, assets: &GameAssets) -> Result<Self, ApiError> {
        let storage = |e: &dyn std::fmt::Display| ApiError::Storage(format!("{}: {e}", dir.display()));
        let id = dir.file_name().and_then(|n| n.to_str()).ok_or_else(|| storage(&"bad directory name"))?.to_string();
        let meta: SessionMeta =
            serde_json::from_str(&fs::read_to_string(dir.join(META_FILE))?).map_err(|e| storage(&e))?;
        let script = match fs::read_to_string(dir.join(EVENTS_FILE)) {
            Ok(text) => Script::parse(&text).map_err(|e| storage(&e))?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Script::default(),
            Err(e) => return Err(e.into()),
        };
        let mut receipts = Vec::new();
        if let Ok(text) = fs::read_to_string(dir.join(RECEIPTS_FILE)) {
            for line in text.lines().filter(|l| !l.trim().is_empty()) {
                receipts.push(serde_json::from_str::<TerraformReceipt>(line).map_err(|e| storage(&e))?);
            }
        }
        let mut session = Self::create(id, meta, assets, None)?;
        let game = &mut session.inner.get_mut().expect("fresh lock").game;
        let mut recorded = receipts.into_iter();
        for TimedCommand { tick, command } in script.commands {
            game.step(tick.saturating_sub(game.clock.tick));
            let generators = match &command {
                Command::Terraform { .. } => {
                    let r = recorded.next().ok_or_else(|| storage(&"event log has more terraforms than receipts"))?;
                    let remote = Recorded { grid: r.grid, kind: r.backend };
                    Generators::with_remote(Box::new(remote), LocalGenerator::default(), false)
                }
                _ => Generators::default(),
            };
            game.apply_command(&command, &generators).map_err(|e| storage(&format!("replay at tick {tick}: {e}")))?;
        }
        session.inner.get_mut().expect("fresh lock").log = Some(EventLog::open(dir)?);
        session.publish_locked();
        Ok(session)
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|p| p.into_inner())
    }

    fn publish(&self, game: &GameState) {
        let snap = Arc::new(StateSnapshot::capture(game));
        *self.snapshot.write().unwrap_or_else(|p| p.into_inner()) = snap;
    }

    fn publish_locked(&self) {
        let inner = self.lock();
        self.publish(&inner.game);
    }

    /// Latest published snapshot; never waits on the writer.
    pub fn snapshot(&self) -> Arc<StateSnapshot> {
        self.snapshot.read().unwrap_or_else(|p| p.into_inner()).clone()
    }

    /// Applies a command at the current tick, logging it when accepted.
    /// Blocks while a remote generator is working.
    pub fn apply(&self, command: Command, generators: &Generators) -> Result<Applied, ApiError> {
        let mut inner = self.lock();
        let tick = inner.game.clock.tick;
        let applied = inner.game.apply_command(&command, generators)?;
        if let Some(log) = inner.log.as_mut() {
            if let Applied::Terraformed(receipt) = &applied {
                log.receipt(receipt)?;
            }
            log.command(tick, command)?;
        }
        self.publish(&inner.game);
        Ok(applied)
    }

    /// Advances up to `n` ticks and returns the new tick and outcome. With
    /// `record`, a `sync` line marks the new tick in the event log.
    pub fn advance(&self, n: u64, record: bool) -> Result<(u64, Outcome), ApiError> {
        let mut inner = self.lock();
        inner.game.step(n);
        let tick = inner.game.clock.tick;
        if record {
            if let Some(log) = inner.log.as_mut() {
                log.command(tick, Command::Sync)?;
            }
        }
        self.publish(&inner.game);
        Ok((tick, inner.game.outcome))
    }

    pub fn tick_seconds(&self) -> f64 {
        self.meta.config.tick_seconds
    }
}

/// Session directories under a data dir.
pub fn session_dirs(data_dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let root = data_dir.join("sessions");
    if !root.exists() {
        return Ok(Vec::new());
    }
    let mut dirs: Vec<PathBuf> =
        fs::read_dir(root)?.filter_map(Result::ok).map(|e| e.path()).filter(|p| p.is_dir()).collect();
    dirs.sort();
    Ok(dirs)
}
