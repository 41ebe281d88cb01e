use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::thread;

use disco_core::client::{ChatClient, ChatRequest, ClientConfig, ClientError, HttpChatClient};
use serde_json::{json, Map, Value};

/// Serves one HTTP response and hands back the request head and body.
fn one_shot(status: &str, body: &str) -> (String, thread::JoinHandle<(String, Value)>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let response = format!(
        "HTTP/1.1 {status}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
        body.len()
    );
    let handle = thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let mut head = String::new();
        let mut length = 0;
        loop {
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            if line == "\r\n" {
                break;
            }
            if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                length = v.trim().parse().unwrap();
            }
            head.push_str(&line);
        }
        let mut body = vec![0; length];
        reader.read_exact(&mut body).unwrap();
        let mut stream = stream;
        stream.write_all(response.as_bytes()).unwrap();
        (head, serde_json::from_slice(&body).unwrap())
    });
    (url, handle)
}

fn client(base_url: String) -> HttpChatClient {
    let mut options = Map::new();
    options.insert("temperature".into(), json!(0));
    HttpChatClient::new(
        ClientConfig { base_url, model: "test-model".into(), options, timeout_secs: 5 },
        "sk-test".into(),
    )
}

fn request() -> ChatRequest {
    ChatRequest { system: "sys".into(), user: "hello".into(), options: Map::new() }
}

#[test]
fn posts_chat_completion() {
    let (url, server) = one_shot("200 OK", r#"{"choices":[{"message":{"role":"assistant","content":"[]"}}]}"#);
    let text = client(url).complete(&request()).unwrap();
    assert_eq!(text, "[]");
    let (head, body) = server.join().unwrap();
    assert!(head.starts_with("POST /v1/chat/completions"), "{head}");
    assert!(head.to_ascii_lowercase().contains("authorization: bearer sk-test"));
    assert_eq!(body["model"], "test-model");
    assert_eq!(body["temperature"], 0);
    assert_eq!(body["messages"][0]["role"], "system");
    assert_eq!(body["messages"][1]["content"], "hello");
}

#[test]
fn http_errors_surface_the_status() {
    let (url, server) = one_shot("503 Service Unavailable", "{}");
    assert_eq!(client(url).complete(&request()), Err(ClientError::Status(503)));
    server.join().unwrap();
}
