//! HTTP client for an external text-to-grid model server.
//!
//! Wire contract: `POST <endpoint>/generate` with body `{"prompt": "<text>"}`;
//! a 200 response carries `{"grid": [[..10 ints..], ..10 rows..]}`, row 0 on
//! top, every value in `0..=15`.

use std::io::ErrorKind;
use std::time::Duration;

use serde_json::Value;

use super::{BackendKind, GenerateError, Generator, Prompt};
use crate::tilemap::{TileGrid, SUBGRID_SIZE};

#[derive(Debug, Clone)]
pub struct RemoteGenerator {
    url: String,
    timeout: Duration,
    agent: ureq::Agent,
}

impl RemoteGenerator {
    /// `endpoint` is the server base URL; `/generate` is appended unless present.
    pub fn new(endpoint: &str, timeout: Duration) -> Self {
        let base = endpoint.trim_end_matches('/');
        let url = if base.ends_with("/generate") { base.to_string() } else { format!("{base}/generate") };
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        RemoteGenerator { url, timeout, agent }
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    fn classify(&self, err: ureq::Error) -> GenerateError {
        match err {
            ureq::Error::Timeout(_) => GenerateError::Timeout { after_ms: self.timeout.as_millis() as u64 },
            ureq::Error::Io(e) if matches!(e.kind(), ErrorKind::TimedOut | ErrorKind::WouldBlock) => {
                GenerateError::Timeout { after_ms: self.timeout.as_millis() as u64 }
            }
            other => GenerateError::Transport(other.to_string()),
        }
    }
}

/// Request body for a prompt, byte for byte.
pub fn encode_request(rendered: &str) -> String {
    let text = serde_json::to_string(rendered).expect("strings always serialize");
    format!("{{\"prompt\": {text}}}")
}

/// Validates a response body into a grid; any shape or range violation is
/// reported as [`GenerateError::MalformedResponse`].
pub fn decode_response(body: &[u8]) -> Result<TileGrid, GenerateError> {
    let malformed = |m: String| GenerateError::MalformedResponse(m);
    let value: Value = serde_json::from_slice(body).map_err(|e| malformed(format!("not JSON: {e}")))?;
    let rows = value
        .get("grid")
        .and_then(Value::as_array)
        .ok_or_else(|| malformed("missing \"grid\" array".into()))?;
    if rows.len() != SUBGRID_SIZE {
        return Err(malformed(format!("grid has {} rows", rows.len())));
    }
    let mut parsed: Vec<Vec<i64>> = Vec::with_capacity(SUBGRID_SIZE);
    for (r, row) in rows.iter().enumerate() {
        let row = row.as_array().ok_or_else(|| malformed(format!("row {r} is not an array")))?;
        let mut out = Vec::with_capacity(row.len());
        for v in row {
            out.push(v.as_i64().ok_or_else(|| malformed(format!("row {r} holds a non-integer {v}")))?);
        }
        parsed.push(out);
    }
    TileGrid::from_rows(&parsed).map_err(|e| malformed(e.to_string()))
}

impl Generator for RemoteGenerator {
    fn kind(&self) -> BackendKind {
        BackendKind::Remote
    }

    fn generate(&self, prompt: &Prompt, _seed: u64) -> Result<TileGrid, GenerateError> {
        let mut response = self
            .agent
            .post(&self.url)
            .header("Content-Type", "application/json")
            .send(encode_request(prompt.rendered()))
            .map_err(|e| self.classify(e))?;
        let status = response.status().as_u16();
        let body = response
            .body_mut()
            .with_config()
            .limit(1 << 20)
            .read_to_vec()
            .map_err(|e| self.classify(e))?;
        if !(200..300).contains(&status) {
            return Err(GenerateError::ServerError {
                status,
                body: String::from_utf8_lossy(&body).chars().take(200).collect(),
            });
        }
        decode_response(&body)
    }
}
