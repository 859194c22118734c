use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use terraword_core::simulation::{GameConfig, GameState};
use terraword_core::terraform::{
    terraform, BackendKind, GenerateError, Generator, GeneratorMode, Generators, LocalGenerator, Prompt,
    RemoteGenerator,
};

enum Reply {
    Status(u16, String),
    Stall(Duration),
}

/// Serves one scripted reply per connection and reports each request body.
fn mock_server(replies: Vec<Reply>) -> (String, mpsc::Receiver<(String, String)>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for reply in replies {
            let Ok((stream, _)) = listener.accept() else { return };
            let (request_line, body) = read_request(&stream);
            let _ = tx.send((request_line, body));
            respond(stream, reply);
        }
    });
    (url, rx)
}

fn read_request(stream: &TcpStream) -> (String, String) {
    let mut reader = BufReader::new(stream);
    let mut request_line = String::new();
    reader.read_line(&mut request_line).unwrap();
    let mut length = 0;
    loop {
        let mut line = String::new();
        reader.read_line(&mut line).unwrap();
        if line == "\r\n" || line.is_empty() {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                length = v.trim().parse().unwrap();
            }
        }
    }
    let mut body = vec![0; length];
    reader.read_exact(&mut body).unwrap();
    (request_line.trim_end().to_string(), String::from_utf8(body).unwrap())
}

fn respond(mut stream: TcpStream, reply: Reply) {
    match reply {
        Reply::Status(status, body) => {
            let head = format!(
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
                body.len()
            );
            let _ = stream.write_all(head.as_bytes());
            let _ = stream.write_all(body.as_bytes());
        }
        Reply::Stall(d) => thread::sleep(d),
    }
}

fn grid_body(rows: usize, value: i64) -> String {
    serde_json::json!({ "grid": vec![vec![value; 10]; rows] }).to_string()
}

fn prompt(text: &str) -> Prompt {
    Prompt::parse(text).unwrap()
}

#[test]
fn valid_grid_is_accepted_and_request_is_exact() {
    let (url, rx) = mock_server(vec![Reply::Status(200, grid_body(10, 9))]);
    let g = RemoteGenerator::new(&url, Duration::from_secs(2));
    let grid = g.generate(&prompt("a river in a forest"), 0).unwrap();
    assert!(grid.iter().all(|t| t.value() == 9));
    let (line, body) = rx.recv().unwrap();
    assert!(line.starts_with("POST /generate "), "{line}");
    assert_eq!(body, r#"{"prompt": "a river in a forest"}"#);
}

#[test]
fn wrong_shape_or_range_is_malformed() {
    let bodies = [
        grid_body(11, 0),
        grid_body(9, 0),
        grid_body(10, 16),
        grid_body(10, -1),
        "{\"tiles\": []}".to_string(),
        "not json".to_string(),
    ];
    for body in bodies {
        let (url, _rx) = mock_server(vec![Reply::Status(200, body.clone())]);
        let g = RemoteGenerator::new(&url, Duration::from_secs(2));
        match g.generate(&prompt("lake"), 0) {
            Err(GenerateError::MalformedResponse(_)) => {}
            other => panic!("{body}: expected MalformedResponse, got {other:?}"),
        }
    }
}

#[test]
fn stalled_server_times_out_promptly() {
    let timeout = Duration::from_millis(400);
    let (url, _rx) = mock_server(vec![Reply::Stall(Duration::from_secs(3))]);
    let g = RemoteGenerator::new(&url, timeout);
    let started = Instant::now();
    let err = g.generate(&prompt("forest"), 0).unwrap_err();
    let took = started.elapsed();
    assert_eq!(err, GenerateError::Timeout { after_ms: 400 });
    assert!(took <= timeout.mul_f64(1.25), "took {took:?}");
}

#[test]
fn server_errors_carry_status() {
    let (url, _rx) = mock_server(vec![Reply::Status(503, "{\"error\":\"busy\"}".into())]);
    let g = RemoteGenerator::new(&url, Duration::from_secs(2));
    match g.generate(&prompt("forest"), 0) {
        Err(GenerateError::ServerError { status: 503, body }) => assert!(body.contains("busy")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn fallback_receipt_is_local() {
    let (url, _rx) = mock_server(vec![Reply::Status(500, "oops".into())]);
    let gens = Generators::from_mode(
        GeneratorMode::RemoteWithFallback,
        Some(&url),
        Duration::from_secs(2),
        LocalGenerator::default(),
    );
    let mut state = GameState::new_game(GameConfig::default(), 42).unwrap();
    let receipt = terraform(&mut state, 0, &["forest"], &gens).unwrap();
    assert_eq!(receipt.backend, BackendKind::LocalRuleBased);
    assert_eq!(receipt.words_spent, vec!["forest".to_string()]);
}

#[test]
fn remote_success_receipt_is_remote() {
    let (url, _rx) = mock_server(vec![Reply::Status(200, grid_body(10, 8))]);
    let gens =
        Generators::from_mode(GeneratorMode::Remote, Some(&url), Duration::from_secs(2), LocalGenerator::default());
    let mut state = GameState::new_game(GameConfig::default(), 42).unwrap();
    let receipt = terraform(&mut state, 0, &["forest"], &gens).unwrap();
    assert_eq!(receipt.backend, BackendKind::Remote);
    assert_eq!(receipt.grid.iter().filter(|t| t.value() == 8).count(), 100);
}

#[test]
fn failure_without_fallback_keeps_words() {
    let (url, _rx) = mock_server(vec![Reply::Status(500, "oops".into())]);
    let gens =
        Generators::from_mode(GeneratorMode::Remote, Some(&url), Duration::from_secs(2), LocalGenerator::default());
    let mut state = GameState::new_game(GameConfig::default(), 42).unwrap();
    let before = state.world.clone();
    assert!(terraform(&mut state, 0, &["forest"], &gens).is_err());
    assert_eq!(state.inventory.count("forest"), 1);
    assert_eq!(state.world, before);
    assert!(state.receipts.is_empty());
}

#[test]
fn unreachable_server_falls_back() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let gens = Generators::from_mode(
        GeneratorMode::RemoteWithFallback,
        Some(&format!("http://127.0.0.1:{port}")),
        Duration::from_millis(500),
        LocalGenerator::default(),
    );
    let (_, backend) = gens.generate(&prompt("forest"), 1).unwrap();
    assert_eq!(backend, BackendKind::LocalRuleBased);
}
