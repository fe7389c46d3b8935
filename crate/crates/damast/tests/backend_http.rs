//! External backend tests against a local HTTP stub.

use std::io::{Read, Write};
use std::net::TcpListener;
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use damast::backend::{ExternalChatBackend, ExternalConfig, ExternalEmbedding};
use damast::annotate_one;
use damast_core::mask::{DamageCategory, SegmentationMask};
use damast_core::metrics::EmbeddingProvider;
use damast_core::narration::{build_prompt, generate_description, NarrationError, TextBackend};
use damast_core::pipeline::AnnotateOptions;
use damast_core::stats::{BuildingCounts, Scope, ZoneStats};
use damast_core::zones::Zone;

/// A scripted response: status code plus a body builder fed the request JSON.
type Reply = (u16, Box<dyn Fn(&serde_json::Value) -> String + Send>);

/// Serves `replies.len()` requests, then stops.
fn spawn_stub(replies: Vec<Reply>) -> (String, mpsc::Receiver<serde_json::Value>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let endpoint = format!("http://{}", listener.local_addr().unwrap());
    let (sender, receiver) = mpsc::channel();
    thread::spawn(move || {
        for (status, body_of) in replies {
            let (mut stream, _) = listener.accept().unwrap();
            stream.set_read_timeout(Some(Duration::from_secs(5))).unwrap();
            let mut buffer = Vec::new();
            let mut chunk = [0u8; 4096];
            let body_start = loop {
                let n = stream.read(&mut chunk).unwrap();
                buffer.extend_from_slice(&chunk[..n]);
                if let Some(pos) = buffer.windows(4).position(|w| w == b"\r\n\r\n") {
                    break pos + 4;
                }
                if n == 0 {
                    return;
                }
            };
            let headers = String::from_utf8_lossy(&buffer[..body_start]).to_lowercase();
            let content_length: usize = headers
                .lines()
                .find_map(|l| l.strip_prefix("content-length:"))
                .and_then(|v| v.trim().parse().ok())
                .unwrap_or(0);
            while buffer.len() < body_start + content_length {
                let n = stream.read(&mut chunk).unwrap();
                if n == 0 {
                    break;
                }
                buffer.extend_from_slice(&chunk[..n]);
            }
            let request: serde_json::Value =
                serde_json::from_slice(&buffer[body_start..body_start + content_length])
                    .unwrap_or(serde_json::Value::Null);
            let body = body_of(&request);
            let reason = if status == 200 { "OK" } else { "Error" };
            let response = format!(
                "HTTP/1.1 {status} {reason}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                body.len()
            );
            stream.write_all(response.as_bytes()).unwrap();
            let _ = sender.send(request);
        }
    });
    (endpoint, receiver)
}

fn chat_reply(content: &str) -> String {
    serde_json::json!({
        "choices": [{"message": {"role": "assistant", "content": content}}]
    })
    .to_string()
}

fn fast_config(endpoint: String) -> ExternalConfig {
    ExternalConfig {
        endpoint,
        api_key: Some("test-key".into()),
        model: "stub-model".into(),
        attempts: 3,
        initial_backoff: Duration::from_millis(10),
        timeout: Duration::from_secs(5),
    }
}

fn sample_stats() -> ZoneStats {
    ZoneStats {
        scope: Scope::Zone(Zone::Top),
        pixel_counts: damast_core::mask::CategoryCounts {
            background: 0,
            intact: 40,
            damaged: 0,
            destroyed: 0,
        },
        instance_counts: BuildingCounts { intact: 2, damaged: 0, destroyed: 0 },
    }
}

#[test]
fn external_backend_returns_grounded_text() {
    let (endpoint, requests) = spawn_stub(vec![(
        200,
        Box::new(|_| chat_reply("The top zone holds 2 intact buildings covering 40 px.")),
    )]);
    let backend = ExternalChatBackend::new(fast_config(endpoint));
    let prompt = build_prompt(&sample_stats(), "");
    let text = generate_description(&prompt, &backend).unwrap();
    assert!(text.contains("2 intact"));

    let request = requests.recv_timeout(Duration::from_secs(5)).unwrap();
    assert_eq!(request["temperature"], 0);
    assert_eq!(request["model"], "stub-model");
    let user = request["messages"][1]["content"].as_str().unwrap();
    assert!(user.starts_with("zone: top\n"), "prompt must open with the stats block");
    assert!(user.contains("intact: 2 buildings (40 px)"));
}

#[test]
fn external_backend_retries_transient_errors() {
    let (endpoint, requests) = spawn_stub(vec![
        (500, Box::new(|_| "{\"error\":\"boom\"}".to_string())),
        (429, Box::new(|_| "{\"error\":\"slow down\"}".to_string())),
        (200, Box::new(|_| chat_reply("After retries: 2 intact buildings, 40 px."))),
    ]);
    let backend = ExternalChatBackend::new(fast_config(endpoint));
    let prompt = build_prompt(&sample_stats(), "");
    let text = generate_description(&prompt, &backend).unwrap();
    assert!(text.contains("After retries"));
    assert_eq!(requests.try_iter().count(), 3);
}

#[test]
fn external_backend_gives_up_after_bounded_attempts() {
    let (endpoint, requests) = spawn_stub(vec![
        (500, Box::new(|_| String::new())),
        (500, Box::new(|_| String::new())),
        (500, Box::new(|_| String::new())),
    ]);
    let backend = ExternalChatBackend::new(fast_config(endpoint));
    let prompt = build_prompt(&sample_stats(), "");
    let err = backend.generate(&prompt).unwrap_err();
    match err {
        NarrationError::Backend { message, .. } => {
            assert!(message.contains("3 attempts failed"), "{message}");
        }
        other => panic!("unexpected error {other:?}"),
    }
    assert_eq!(requests.try_iter().count(), 3);
}

#[test]
fn client_errors_are_not_retried() {
    let (endpoint, requests) = spawn_stub(vec![(400, Box::new(|_| String::new()))]);
    let backend = ExternalChatBackend::new(fast_config(endpoint));
    let prompt = build_prompt(&sample_stats(), "");
    assert!(backend.generate(&prompt).is_err());
    thread::sleep(Duration::from_millis(50));
    assert_eq!(requests.try_iter().count(), 1);
}

#[test]
fn unreachable_endpoint_is_a_backend_error() {
    // Port 9 on localhost is expected to refuse connections.
    let mut config = fast_config("http://127.0.0.1:9".into());
    config.attempts = 2;
    let backend = ExternalChatBackend::new(config);
    let prompt = build_prompt(&sample_stats(), "");
    let err = backend.generate(&prompt).unwrap_err();
    assert!(matches!(err, NarrationError::Backend { .. }));
}

#[test]
fn hallucinated_external_text_is_rejected() {
    let (endpoint, _requests) = spawn_stub(vec![(
        200,
        Box::new(|_| chat_reply("Many buildings look damaged.")),
    )]);
    let backend = ExternalChatBackend::new(fast_config(endpoint));
    let prompt = build_prompt(&sample_stats(), "");
    let err = generate_description(&prompt, &backend).unwrap_err();
    assert!(matches!(err, NarrationError::MissingCounts { .. }), "{err:?}");
}

#[test]
fn annotate_one_works_with_an_echoing_external_backend() {
    // The stub echoes back every integer from the statistics block, which is
    // exactly what the groundedness validator requires.
    let replies: Vec<Reply> = (0..5)
        .map(|_| -> Reply {
            (
                200,
                Box::new(|request: &serde_json::Value| {
                    let prompt = request["messages"][1]["content"].as_str().unwrap_or("");
                    let numbers: Vec<String> = damast_core::narration::extract_integers(prompt)
                        .into_iter()
                        .map(|n| n.to_string())
                        .collect();
                    chat_reply(&format!("Zone analysis echoing {}.", numbers.join(", ")))
                }),
            )
        })
        .collect();
    let (endpoint, _requests) = spawn_stub(replies);

    let mask = SegmentationMask::from_fn(50, 50, |u, v| {
        if (22..26).contains(&u) && (22..26).contains(&v) {
            DamageCategory::Destroyed
        } else {
            DamageCategory::Background
        }
    })
    .unwrap();
    let backend = ExternalChatBackend::new(fast_config(endpoint));
    let document = annotate_one(&mask, &AnnotateOptions::new("external"), &backend, true).unwrap();
    assert_eq!(document.metadata.backend, "external:stub-model");
    assert!(document.semantic.zone_descriptions.central.contains("16"));
}

#[test]
fn embedding_provider_parses_vectors() {
    let (endpoint, requests) = spawn_stub(vec![(
        200,
        Box::new(|_| {
            serde_json::json!({"data": [{"embedding": [0.5, -0.25, 0.125]}]}).to_string()
        }),
    )]);
    let provider = ExternalEmbedding::new(fast_config(endpoint));
    let vector = provider.embed("two intact buildings").unwrap();
    assert_eq!(vector, vec![0.5, -0.25, 0.125]);
    let request = requests.recv_timeout(Duration::from_secs(5)).unwrap();
    assert_eq!(request["input"][0], "two intact buildings");
}
