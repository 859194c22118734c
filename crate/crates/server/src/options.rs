use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use clap::{ArgAction, Args};
use thiserror::Error;

use terraword_core::simulation::GameAssets;
use terraword_core::terraform::{GeneratorMode, Generators, LocalGenerator};
use terraword_core::tilemap::TileSet;
use terraword_core::wordbank::WordFrequencyTable;

use crate::api::{realtime_loop, router, AppState};
use crate::error::ApiError;

#[derive(Debug, Error)]
pub enum ServerError {
    #[error("cannot load tileset: {0}")]
    Tileset(String),
    #[error("cannot load word frequencies: {0}")]
    Words(String),
    #[error(transparent)]
    Api(#[from] ApiError),
    #[error("cannot listen: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Args)]
pub struct ServerArgs {
    /// Port to listen on.
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Address to bind.
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Remote generator base URL; without it every grid is generated locally.
    #[arg(long)]
    pub generator_url: Option<String>,
    #[arg(long, default_value_t = 2000)]
    pub generator_timeout_ms: u64,
    /// Fall back to the local generator on remote timeouts and server errors.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub fallback: bool,
    /// Tileset document replacing the shipped one.
    #[arg(long)]
    pub tileset: Option<PathBuf>,
    /// Word frequency table replacing the shipped one.
    #[arg(long)]
    pub wordfreq: Option<PathBuf>,
    /// Directory for session event logs and the prompt log; sessions found
    /// there are recovered at startup.
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
}

impl ServerArgs {
    pub fn generators(&self) -> Generators {
        let mode = if self.fallback { GeneratorMode::RemoteWithFallback } else { GeneratorMode::Remote };
        Generators::from_mode(
            mode,
            self.generator_url.as_deref(),
            Duration::from_millis(self.generator_timeout_ms),
            LocalGenerator::default(),
        )
    }

    pub fn assets(&self) -> Result<GameAssets, ServerError> {
        let tileset = match &self.tileset {
            Some(p) => TileSet::load(p).map_err(|e| ServerError::Tileset(e.to_string()))?,
            None => TileSet::default(),
        };
        let words = match &self.wordfreq {
            Some(p) => WordFrequencyTable::load(p).map_err(|e| ServerError::Words(e.to_string()))?,
            None => WordFrequencyTable::shipped(),
        };
        GameAssets::new(tileset, &words).map_err(|e| ServerError::Words(e.to_string()))
    }

    /// Server state with persisted sessions recovered.
    pub fn app_state(&self) -> Result<Arc<AppState>, ServerError> {
        let app = Arc::new(AppState::new(self.generators(), self.assets()?, self.data_dir.clone())?);
        app.recover()?;
        Ok(app)
    }
}

/// Runs the server until the process is stopped.
pub async fn serve(args: ServerArgs) -> Result<(), ServerError> {
    let app = args.app_state()?;
    for id in app.session_ids() {
        let session = app.session(&id)?;
        if session.meta.realtime && session.snapshot().outcome == terraword_core::simulation::Outcome::Ongoing {
            tokio::spawn(realtime_loop(session));
        }
    }
    let addr: SocketAddr = format!("{}:{}", args.host, args.port)
        .parse()
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, format!("{e}")))?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("terraword server listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(app)).await?;
    Ok(())
}
