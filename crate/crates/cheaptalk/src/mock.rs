//! Offline stand-in for the chat server: answers `/api/chat` from fixtures
//! or a built-in responder and records every request body.

use std::io;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tiny_http::{Header, Method, Response, Server};

use crate::http::{CHAT_PATH, TAGS_PATH};

/// What to answer when no fixture matches.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reply {
    /// The last user message, verbatim.
    Echo,
    /// Always the same text.
    Fixed(String),
    /// A well-formed answer for whatever phase the prompt asks about.
    Protocol,
    /// An HTTP error with this status and body.
    Status(u16, String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    /// Matches when the last user message contains this text.
    pub contains: String,
    pub reply: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MockConfig {
    #[serde(default)]
    pub fixtures: Vec<Fixture>,
    #[serde(default = "default_reply")]
    pub fallback: Reply,
}

fn default_reply() -> Reply {
    Reply::Protocol
}

impl Default for MockConfig {
    fn default() -> Self {
        MockConfig { fixtures: Vec::new(), fallback: Reply::Protocol }
    }
}

impl MockConfig {
    pub fn replying(fallback: Reply) -> MockConfig {
        MockConfig { fixtures: Vec::new(), fallback }
    }
}

/// Cooperative answer in the format the prompt requests.
pub fn protocol_reply(prompt: &str) -> String {
    let ids: Vec<&str> = prompt.lines().filter_map(|l| l.trim().strip_suffix(": C or D")).collect();
    if !ids.is_empty() {
        return ids.iter().map(|id| format!("{id}: C")).collect::<Vec<_>>().join("\n");
    }
    if prompt.contains("ACTION: C or ACTION: D") {
        return String::from("I will keep my word.\nACTION: C");
    }
    String::from("Let us both keep cooperating.")
}

fn last_user(body: &Value) -> &str {
    body["messages"]
        .as_array()
        .and_then(|m| m.iter().rev().find(|t| t["role"] == "user"))
        .and_then(|t| t["content"].as_str())
        .unwrap_or("")
}

fn answer(config: &MockConfig, body: &Value) -> Result<String, (u16, String)> {
    let prompt = last_user(body);
    if let Some(f) = config.fixtures.iter().find(|f| prompt.contains(&f.contains)) {
        return Ok(f.reply.clone());
    }
    match &config.fallback {
        Reply::Echo => Ok(prompt.to_string()),
        Reply::Fixed(text) => Ok(text.clone()),
        Reply::Protocol => Ok(protocol_reply(prompt)),
        Reply::Status(code, text) => Err((*code, text.clone())),
    }
}

fn json_header() -> Header {
    Header::from_bytes("Content-Type", "application/json").expect("static header")
}

fn handle(config: &MockConfig, log: &Mutex<Vec<Value>>, mut req: tiny_http::Request) -> io::Result<()> {
    let path = req.url().split('?').next().unwrap_or("").to_string();
    match (req.method(), path.as_str()) {
        (Method::Get, TAGS_PATH) => {
            req.respond(Response::from_string(json!({ "models": [] }).to_string()).with_header(json_header()))
        }
        (Method::Post, CHAT_PATH) => {
            let mut raw = String::new();
            req.as_reader().read_to_string(&mut raw)?;
            let body: Value = match serde_json::from_str(&raw) {
                Ok(v) => v,
                Err(e) => return req.respond(Response::from_string(e.to_string()).with_status_code(400)),
            };
            log.lock().unwrap_or_else(|e| e.into_inner()).push(body.clone());
            match answer(config, &body) {
                Ok(text) => {
                    let reply = json!({
                        "model": body["model"],
                        "message": { "role": "assistant", "content": text },
                        "done": true,
                        "prompt_eval_count": raw.len() / 4,
                        "eval_count": text.len() / 4,
                    });
                    req.respond(Response::from_string(reply.to_string()).with_header(json_header()))
                }
                Err((code, text)) => req.respond(Response::from_string(text).with_status_code(code)),
            }
        }
        _ => req.respond(Response::from_string("not found").with_status_code(404)),
    }
}

pub struct MockServer {
    server: Arc<Server>,
    addr: SocketAddr,
    requests: Arc<Mutex<Vec<Value>>>,
    worker: Option<JoinHandle<()>>,
}

impl MockServer {
    /// Serves on an ephemeral localhost port until dropped.
    pub fn start(config: MockConfig) -> io::Result<MockServer> {
        MockServer::bind("127.0.0.1:0", config)
    }

    pub fn bind(addr: &str, config: MockConfig) -> io::Result<MockServer> {
        let server = Arc::new(Server::http(addr).map_err(io::Error::other)?);
        let addr = server
            .server_addr()
            .to_ip()
            .ok_or_else(|| io::Error::other("mock server is not bound to an IP address"))?;
        let requests = Arc::new(Mutex::new(Vec::new()));
        let worker = {
            let server = Arc::clone(&server);
            let requests = Arc::clone(&requests);
            thread::spawn(move || {
                for req in server.incoming_requests() {
                    if let Err(e) = handle(&config, &requests, req) {
                        log::warn!("mock server: {e}");
                    }
                }
            })
        };
        Ok(MockServer { server, addr, requests, worker: Some(worker) })
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Request bodies received so far, in arrival order.
    pub fn requests(&self) -> Vec<Value> {
        self.requests.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }

    /// Blocks until the server thread stops.
    pub fn wait(mut self) {
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}
