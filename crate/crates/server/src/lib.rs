//! Session-scoped HTTP API over the terraword engine.
//!
//! Routes:
//!
//! - `POST /sessions` `{seed?, config?, realtime?}` → `201 {session_id, seed}`
//! - `GET /sessions/{id}/state` → state snapshot
//! - `POST /sessions/{id}/terraform` `{grid_index, words}` → receipt
//! - `POST /sessions/{id}/command` `{villager_id, task, args?}` → `{tick}`
//! - `POST /sessions/{id}/tick` `{n}` → `{tick, outcome}`
//!
//! Errors are `{"error": {"code", "message"}}` with 400 for validation, 404
//! for unknown sessions, villagers and monsters, 409 for conflicts with game
//! state, and 502 when generation fails without a fallback.

pub mod api;
pub mod error;
pub mod options;
pub mod session;

pub use api::{router, AppState};
pub use error::ApiError;
pub use options::{serve, ServerArgs, ServerError};
pub use session::{Session, SessionMeta};
