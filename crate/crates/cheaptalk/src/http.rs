//! Chat-completion client for a local Ollama-compatible server.

use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use cheaptalk_core::gateway::{ChatBackend, ChatTurn, Completion, GatewayError, ModelConfig, Role};
use serde::{Deserialize, Serialize};

pub const CHAT_PATH: &str = "/api/chat";
pub const TAGS_PATH: &str = "/api/tags";
const EXCERPT_CHARS: usize = 200;

#[derive(Serialize)]
struct WireTurn<'a> {
    role: Role,
    content: &'a str,
}

#[derive(Serialize)]
struct Options {
    temperature: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<WireTurn<'a>>,
    stream: bool,
    options: Options,
}

#[derive(Deserialize)]
struct WireMessage {
    content: String,
}

#[derive(Deserialize)]
struct ChatResponse {
    message: WireMessage,
    prompt_eval_count: Option<u64>,
    eval_count: Option<u64>,
}

/// Counting semaphore bounding requests in flight.
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Gate);

impl Gate {
    fn new(cap: usize) -> Gate {
        Gate { free: Mutex::new(cap.max(1)), cv: Condvar::new() }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

fn url(base: &str, path: &str) -> String {
    format!("{}{}", base.trim_end_matches('/'), path)
}

fn excerpt(body: &str) -> String {
    let mut out: String = body.chars().take(EXCERPT_CHARS).collect();
    if body.chars().count() > EXCERPT_CHARS {
        out.push_str("...");
    }
    out
}

pub struct HttpBackend {
    agent: ureq::Agent,
    gate: Gate,
    backoff: Duration,
}

impl HttpBackend {
    pub fn new(max_in_flight: usize) -> HttpBackend {
        HttpBackend {
            agent: ureq::AgentBuilder::new().build(),
            gate: Gate::new(max_in_flight),
            backoff: Duration::from_millis(250),
        }
    }

    /// First retry delay; each further retry doubles it.
    pub fn with_backoff(mut self, backoff: Duration) -> HttpBackend {
        self.backoff = backoff;
        self
    }

    fn attempt(&self, config: &ModelConfig, body: &str) -> Result<Completion, Attempt> {
        let started = Instant::now();
        let resp = self
            .agent
            .post(&url(&config.base_url, CHAT_PATH))
            .timeout(Duration::from_millis(config.timeout_ms))
            .set("Content-Type", "application/json")
            .send_string(body);
        let resp = match resp {
            Ok(r) => r,
            Err(ureq::Error::Status(status, r)) => {
                let text = r.into_string().unwrap_or_default();
                return Err(Attempt::Fatal(GatewayError::Protocol { status, excerpt: excerpt(&text) }));
            }
            Err(ureq::Error::Transport(t)) => return Err(Attempt::Retry(t.to_string())),
        };
        let status = resp.status();
        let text = resp.into_string().map_err(|e| Attempt::Retry(e.to_string()))?;
        let parsed: ChatResponse = serde_json::from_str(&text)
            .map_err(|_| Attempt::Fatal(GatewayError::Protocol { status, excerpt: excerpt(&text) }))?;
        Ok(Completion {
            text: parsed.message.content,
            latency_ms: started.elapsed().as_millis() as u64,
            prompt_tokens: parsed.prompt_eval_count,
            completion_tokens: parsed.eval_count,
        })
    }
}

enum Attempt {
    Retry(String),
    Fatal(GatewayError),
}

impl ChatBackend for HttpBackend {
    fn complete(
        &self,
        config: &ModelConfig,
        turns: &[ChatTurn],
        request_seed: Option<u64>,
    ) -> Result<Completion, GatewayError> {
        let request = ChatRequest {
            model: &config.model,
            messages: turns.iter().map(|t| WireTurn { role: t.role, content: &t.content }).collect(),
            stream: false,
            options: Options { temperature: config.temperature, seed: request_seed },
        };
        let body = serde_json::to_string(&request).expect("request serializes");
        let _permit = self.gate.acquire();
        let attempts = config.retries + 1;
        let mut last = String::new();
        for attempt in 0..attempts {
            match self.attempt(config, &body) {
                Ok(c) => return Ok(c),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(msg)) => {
                    last = msg;
                    if attempt + 1 < attempts {
                        let delay = self.backoff * 2u32.saturating_pow(attempt);
                        log::warn!("request to {} failed ({last}); retrying in {delay:?}", config.base_url);
                        thread::sleep(delay);
                    }
                }
            }
        }
        Err(GatewayError::Transport { attempts, message: last })
    }
}

/// Checks that a server answers at `base_url` before any work starts.
pub fn preflight(base_url: &str, timeout: Duration) -> Result<(), GatewayError> {
    match ureq::get(&url(base_url, TAGS_PATH)).timeout(timeout).call() {
        Ok(_) => Ok(()),
        Err(ureq::Error::Status(status, r)) => {
            Err(GatewayError::Protocol { status, excerpt: excerpt(&r.into_string().unwrap_or_default()) })
        }
        Err(ureq::Error::Transport(t)) => Err(GatewayError::Transport { attempts: 1, message: t.to_string() }),
    }
}
