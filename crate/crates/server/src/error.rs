use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;
use thiserror::Error;

use terraword_core::simulation::{CommandError, ConfigError};

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("no session {0:?}")]
    UnknownSession(String),
    #[error("{0}")]
    InvalidRequest(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Command(#[from] CommandError),
    #[error("session storage failed: {0}")]
    Storage(String),
}

impl From<std::io::Error> for ApiError {
    fn from(e: std::io::Error) -> Self {
        ApiError::Storage(e.to_string())
    }
}

impl ApiError {
    pub fn code(&self) -> &'static str {
        match self {
            ApiError::UnknownSession(_) => "unknown_session",
            ApiError::InvalidRequest(_) => "invalid_request",
            ApiError::Config(_) => "invalid_config",
            ApiError::Command(e) => e.code(),
            ApiError::Storage(_) => "storage_failed",
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::UnknownSession(_) => StatusCode::NOT_FOUND,
            ApiError::InvalidRequest(_) | ApiError::Config(_) => StatusCode::BAD_REQUEST,
            ApiError::Storage(_) => StatusCode::INTERNAL_SERVER_ERROR,
            ApiError::Command(e) => match e.code() {
                "unknown_villager" | "unknown_monster" => StatusCode::NOT_FOUND,
                "grid_occupied" | "word_not_owned" | "game_over" => StatusCode::CONFLICT,
                "generation_failed" => StatusCode::BAD_GATEWAY,
                _ => StatusCode::BAD_REQUEST,
            },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": { "code": self.code(), "message": self.to_string() } });
        (self.status(), Json(body)).into_response()
    }
}
