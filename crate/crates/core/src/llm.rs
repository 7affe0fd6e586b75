//! Few-shot translation through a remote chat-completion endpoint.
//!
//! The HTTP layer sits behind [`Transport`] so prompt construction, retry
//! handling and completion extraction run identically against a mock.

use std::collections::HashSet;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::time::{Duration, Instant};

use serde_json::{json, Value};
use thiserror::Error;

use crate::dataset::Sample;
use crate::harness::{PredictionKind, PredictionRecord};

/// Environment variable holding the endpoint API key.
pub const API_KEY_ENV: &str = "GEOCMD_API_KEY";

const PROMPT_HEAD: &str = "You are an expert system that translates user queries into geospatial function calls. Here are some examples:
User: I'd like to zoom out by 2 levels
Function Call: ZoomOut(2)
User: Show the seismic activity map from WMS URL <https://example.activity/wms>
Function Call: AddWMS('https://example.activity/wms')
User: Load the point vector using point_zones_NY_kpn.kml!
Function Call: AddVector('point', 'point_zones_NY_kpn.kml')
User: Add marker 'University' at location -73.1888, 122.889!
Function Call: AddMarker('University', [-73.1888, 122.889])
User: Set map bounds from 62.2585, -120.3652 to 63.8833, -3.3906.
Function Call: MoveToExtent(62.2585, -120.3652, 63.8833, -3.3906)
User: Switch to the OpenMallMap layer for retail therapy.
Function Call: AddLayer('OpenMallMap')
User: Can we go to 40.5267, -79.4892?
Function Call: Move(40.5267, -79.4892)
User: Draw a Line on the map!
Function Call: Draw('Line')
User: Set the background color to ivory.
Function Call: Cartography('background', 'ivory', null)
User: Zoom in by 7 levels to focus on the details.
Function Call: ZoomIn(7)
User: ";

const PROMPT_TAIL: &str = "\nFunction Call:";

/// The ten-example few-shot prompt with `query` in the final user slot.
pub fn build_prompt(query: &str) -> String {
    let mut prompt = String::with_capacity(PROMPT_HEAD.len() + query.len() + PROMPT_TAIL.len());
    prompt.push_str(PROMPT_HEAD);
    prompt.push_str(query);
    prompt.push_str(PROMPT_TAIL);
    prompt
}

/// First line of the completion, minus any leading `Function Call:` label,
/// trimmed.
pub fn extract_call(raw: &str) -> String {
    let mut line = raw.trim_start().split('\n').next().unwrap_or("").trim();
    while let Some(rest) = line.strip_prefix("Function Call:") {
        line = rest.trim();
    }
    line.to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LlmError {
    #[error("authentication failed: {0}")]
    AuthError(String),
    #[error("rate limited by endpoint")]
    RateLimited,
    #[error("request timed out")]
    Timeout,
    #[error("transport error: {0}")]
    TransportError(String),
    #[error("endpoint returned an empty completion")]
    EmptyCompletion,
    /// A client error other than authentication; retrying will not help.
    #[error("endpoint rejected the request with HTTP {status}: {body}")]
    Rejected { status: u16, body: String },
    #[error("could not persist predictions: {0}")]
    Persist(String),
}

impl LlmError {
    pub fn is_retryable(&self) -> bool {
        matches!(
            self,
            LlmError::RateLimited | LlmError::Timeout | LlmError::TransportError(_)
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LlmConfig {
    pub endpoint_url: String,
    pub model_name: String,
    pub api_key: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout_ms: u64,
    pub max_retries: u32,
    /// First retry waits this long; each further retry doubles it.
    pub backoff_base_ms: u64,
    /// Minimum spacing between consecutive requests in a batch.
    pub min_interval_ms: u64,
}

impl LlmConfig {
    pub fn new(
        endpoint_url: impl Into<String>,
        model_name: impl Into<String>,
        api_key: impl Into<String>,
    ) -> Self {
        LlmConfig {
            endpoint_url: endpoint_url.into(),
            model_name: model_name.into(),
            api_key: api_key.into(),
            temperature: 0.0,
            max_tokens: 64,
            timeout_ms: 30_000,
            max_retries: 3,
            backoff_base_ms: 500,
            min_interval_ms: 0,
        }
    }

    /// Reads the key from `GEOCMD_API_KEY`.
    pub fn from_env(
        endpoint_url: impl Into<String>,
        model_name: impl Into<String>,
    ) -> Result<Self, LlmError> {
        match std::env::var(API_KEY_ENV) {
            Ok(key) if !key.trim().is_empty() => Ok(LlmConfig::new(endpoint_url, model_name, key)),
            _ => Err(LlmError::AuthError(format!("{API_KEY_ENV} is not set"))),
        }
    }

    /// JSON body for one chat request carrying the full prompt as a single
    /// user message.
    pub fn request_body(&self, prompt: &str) -> Value {
        json!({
            "model": self.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub url: String,
    pub api_key: String,
    pub body: Value,
    pub timeout: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpReply {
    pub status: u16,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportFailure {
    #[error("timed out")]
    Timeout,
    #[error("{0}")]
    Connection(String),
}

pub trait Transport {
    fn send(&self, request: &ChatRequest) -> Result<HttpReply, TransportFailure>;
}

impl<T: Transport + ?Sized> Transport for &T {
    fn send(&self, request: &ChatRequest) -> Result<HttpReply, TransportFailure> {
        (**self).send(request)
    }
}

/// Blocking HTTPS transport.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new() -> Result<Self, LlmError> {
        let client = reqwest::blocking::Client::builder()
            .build()
            .map_err(|e| LlmError::TransportError(e.to_string()))?;
        Ok(HttpTransport { client })
    }
}

impl Transport for HttpTransport {
    fn send(&self, request: &ChatRequest) -> Result<HttpReply, TransportFailure> {
        let result = self
            .client
            .post(&request.url)
            .bearer_auth(&request.api_key)
            .header("Content-Type", "application/json")
            .header("Accept", "application/json")
            .timeout(request.timeout)
            .body(request.body.to_string())
            .send();
        let response = result.map_err(|e| {
            if e.is_timeout() {
                TransportFailure::Timeout
            } else {
                TransportFailure::Connection(e.to_string())
            }
        })?;
        let status = response.status().as_u16();
        let body = response.text().map_err(|e| {
            if e.is_timeout() {
                TransportFailure::Timeout
            } else {
                TransportFailure::Connection(e.to_string())
            }
        })?;
        Ok(HttpReply { status, body })
    }
}

/// Completion text from the common response envelopes: Cohere v2
/// (`message.content[].text`), Cohere v1 (`text`), OpenAI-style chat and
/// completion (`choices[0].message.content`, `choices[0].text`) and
/// `generations[0].text`.
pub fn completion_text(body: &Value) -> Option<String> {
    if let Some(content) = body.pointer("/message/content") {
        match content {
            Value::String(s) => return Some(s.clone()),
            Value::Array(parts) => {
                let text: String = parts
                    .iter()
                    .filter_map(|p| p.get("text").and_then(Value::as_str))
                    .collect();
                return Some(text);
            }
            _ => {}
        }
    }
    [
        "/text",
        "/choices/0/message/content",
        "/choices/0/text",
        "/generations/0/text",
    ]
    .iter()
    .find_map(|p| body.pointer(p).and_then(Value::as_str).map(str::to_string))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LlmResponse {
    pub raw_text: String,
    pub extracted_call: String,
    pub attempts: u32,
    pub latency_ms: u64,
}

pub struct LlmClient<T> {
    config: LlmConfig,
    transport: T,
}

impl<T: Transport> LlmClient<T> {
    pub fn new(config: LlmConfig, transport: T) -> Self {
        LlmClient { config, transport }
    }

    pub fn config(&self) -> &LlmConfig {
        &self.config
    }

    fn attempt(&self, request: &ChatRequest) -> Result<String, LlmError> {
        let reply = self.transport.send(request).map_err(|e| match e {
            TransportFailure::Timeout => LlmError::Timeout,
            TransportFailure::Connection(m) => LlmError::TransportError(m),
        })?;
        match reply.status {
            200..=299 => {}
            401 | 403 => return Err(LlmError::AuthError(format!("HTTP {}", reply.status))),
            408 => return Err(LlmError::Timeout),
            429 => return Err(LlmError::RateLimited),
            500..=599 => {
                return Err(LlmError::TransportError(format!("HTTP {}", reply.status)));
            }
            status => {
                return Err(LlmError::Rejected {
                    status,
                    body: reply.body,
                })
            }
        }
        let body: Value = serde_json::from_str(&reply.body)
            .map_err(|e| LlmError::TransportError(format!("response is not JSON: {e}")))?;
        match completion_text(&body) {
            Some(text) if !text.trim().is_empty() => Ok(text),
            _ => Err(LlmError::EmptyCompletion),
        }
    }

    /// One translation with retries on transient failures.
    pub fn translate(&self, query: &str) -> Result<LlmResponse, LlmError> {
        let request = ChatRequest {
            url: self.config.endpoint_url.clone(),
            api_key: self.config.api_key.clone(),
            body: self.config.request_body(&build_prompt(query)),
            timeout: Duration::from_millis(self.config.timeout_ms),
        };
        let started = Instant::now();
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.attempt(&request) {
                Ok(raw_text) => {
                    return Ok(LlmResponse {
                        extracted_call: extract_call(&raw_text),
                        raw_text,
                        attempts,
                        latency_ms: started.elapsed().as_millis() as u64,
                    })
                }
                Err(e) if e.is_retryable() && attempts <= self.config.max_retries => {
                    let shift = (attempts - 1).min(16);
                    let wait = self.config.backoff_base_ms.saturating_mul(1 << shift);
                    std::thread::sleep(Duration::from_millis(wait));
                }
                Err(e) => return Err(e),
            }
        }
    }
}

/// Free-function form of [`LlmClient::translate`].
pub fn translate_remote<T: Transport>(
    config: &LlmConfig,
    transport: T,
    query: &str,
) -> Result<LlmResponse, LlmError> {
    LlmClient::new(config.clone(), transport).translate(query)
}

/// Translates samples sequentially.
///
/// Per-query failures become failed records with an empty prediction; only
/// an authentication failure aborts the batch. When `progress` is given,
/// records already present there are skipped and each new record is
/// appended as soon as it is produced, so an interrupted run resumes where
/// it stopped. Returns all records for `system`, sorted by id.
pub fn batch_translate<T: Transport>(
    client: &LlmClient<T>,
    system: &str,
    samples: &[Sample],
    progress: Option<&Path>,
) -> Result<Vec<PredictionRecord>, LlmError> {
    let persist = |e: std::io::Error| LlmError::Persist(e.to_string());
    let mut records = match progress {
        Some(path) if path.exists() => read_progress(path, system)?,
        _ => Vec::new(),
    };
    let done: HashSet<u64> = records.iter().map(|r| r.id).collect();
    let mut sink = match progress {
        Some(path) => {
            let torn = fs::read(path).is_ok_and(|b| b.last().is_some_and(|&c| c != b'\n'));
            let mut file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(persist)?;
            if torn {
                file.write_all(b"\n").map_err(persist)?;
            }
            Some(file)
        }
        None => None,
    };
    let interval = Duration::from_millis(client.config().min_interval_ms);
    let mut last_request: Option<Instant> = None;
    for sample in samples.iter().filter(|s| !done.contains(&s.id)) {
        if let Some(t) = last_request {
            let elapsed = t.elapsed();
            if elapsed < interval {
                std::thread::sleep(interval - elapsed);
            }
        }
        last_request = Some(Instant::now());
        let (prediction, failed) = match client.translate(&sample.query) {
            Ok(r) => (r.extracted_call, false),
            Err(e @ LlmError::AuthError(_)) => return Err(e),
            Err(_) => (String::new(), true),
        };
        let record = PredictionRecord {
            id: sample.id,
            system: system.to_string(),
            kind: PredictionKind::Generation,
            query: sample.query.clone(),
            reference: sample.call.clone(),
            prediction,
            failed,
        };
        if let Some(out) = sink.as_mut() {
            let line = serde_json::to_string(&record).expect("record serializes");
            writeln!(out, "{line}")
                .and_then(|_| out.flush())
                .map_err(persist)?;
        }
        records.push(record);
    }
    records.sort_by_key(|r| r.id);
    Ok(records)
}

fn read_progress(path: &Path, system: &str) -> Result<Vec<PredictionRecord>, LlmError> {
    let file = File::open(path).map_err(|e| LlmError::Persist(e.to_string()))?;
    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| LlmError::Persist(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        // A run killed mid-write can leave a partial final line.
        let Ok(record) = serde_json::from_str::<PredictionRecord>(&line) else {
            continue;
        };
        if record.system == system && seen.insert(record.id) {
            records.push(record);
        }
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::RefCell;

    struct Scripted {
        replies: RefCell<Vec<Result<HttpReply, TransportFailure>>>,
        requests: RefCell<Vec<ChatRequest>>,
    }

    impl Scripted {
        fn new(mut replies: Vec<Result<HttpReply, TransportFailure>>) -> Self {
            replies.reverse();
            Scripted {
                replies: RefCell::new(replies),
                requests: RefCell::new(Vec::new()),
            }
        }
    }

    impl Transport for Scripted {
        fn send(&self, request: &ChatRequest) -> Result<HttpReply, TransportFailure> {
            self.requests.borrow_mut().push(request.clone());
            self.replies
                .borrow_mut()
                .pop()
                .expect("scripted reply available")
        }
    }

    fn ok(text: &str) -> Result<HttpReply, TransportFailure> {
        Ok(HttpReply {
            status: 200,
            body: json!({"message": {"content": [{"type": "text", "text": text}]}}).to_string(),
        })
    }

    fn status(code: u16) -> Result<HttpReply, TransportFailure> {
        Ok(HttpReply {
            status: code,
            body: "{}".into(),
        })
    }

    fn config() -> LlmConfig {
        let mut c = LlmConfig::new("http://mock/chat", "mock-model", "key");
        c.backoff_base_ms = 0;
        c
    }

    #[test]
    fn prompt_shape() {
        let p = build_prompt("Zoom out please");
        assert!(p.ends_with("User: Zoom out please\nFunction Call:"));
        assert_eq!(p.matches("Function Call:").count(), 11);
        assert_eq!(p, build_prompt("Zoom out please"));
        assert!(p.starts_with(
            "You are an expert system that translates user queries into geospatial function calls. Here are some examples:\nUser: I'd like to zoom out by 2 levels\nFunction Call: ZoomOut(2)\n"
        ));
    }

    #[test]
    fn extraction_rule() {
        assert_eq!(extract_call("ZoomOut(2)"), "ZoomOut(2)");
        assert_eq!(
            extract_call("Function Call: Move(1.0, 2.0)\nextra"),
            "Move(1.0, 2.0)"
        );
        assert_eq!(
            extract_call("  Draw('Line')  \r\nUser: more"),
            "Draw('Line')"
        );
        assert_eq!(extract_call(""), "");
        let twice = "Function Call: Function Call: ZoomIn(3)";
        assert_eq!(extract_call(&extract_call(twice)), extract_call(twice));
    }

    #[test]
    fn envelope_variants() {
        let cases = [
            json!({"message": {"content": [{"type": "text", "text": "A"}]}}),
            json!({"message": {"content": "A"}}),
            json!({"text": "A"}),
            json!({"choices": [{"message": {"role": "assistant", "content": "A"}}]}),
            json!({"choices": [{"text": "A"}]}),
            json!({"generations": [{"text": "A"}]}),
        ];
        for body in cases {
            assert_eq!(completion_text(&body).as_deref(), Some("A"), "{body}");
        }
        assert_eq!(completion_text(&json!({"foo": 1})), None);
    }

    #[test]
    fn request_carries_config() {
        let t = Scripted::new(vec![ok("ZoomOut(2)")]);
        let client = LlmClient::new(config(), &t);
        let r = client.translate("zoom out by 2").unwrap();
        assert_eq!(r.extracted_call, "ZoomOut(2)");
        let req = &t.requests.borrow()[0];
        assert_eq!(req.body["temperature"], 0.0);
        assert_eq!(req.body["max_tokens"], 64);
        assert_eq!(req.body["model"], "mock-model");
        assert_eq!(
            req.body["messages"][0]["content"].as_str().unwrap(),
            build_prompt("zoom out by 2")
        );
    }

    #[test]
    fn retries_rate_limits() {
        let t = Scripted::new(vec![status(429), status(429), ok("ZoomIn(1)")]);
        let r = LlmClient::new(config(), &t).translate("zoom in").unwrap();
        assert_eq!(r.attempts, 3);
        assert_eq!(r.extracted_call, "ZoomIn(1)");
    }

    #[test]
    fn gives_up_after_max_retries() {
        let mut c = config();
        c.max_retries = 1;
        let t = Scripted::new(vec![
            Err(TransportFailure::Timeout),
            Err(TransportFailure::Timeout),
        ]);
        assert_eq!(LlmClient::new(c, &t).translate("q"), Err(LlmError::Timeout));
        assert_eq!(t.requests.borrow().len(), 2);
    }

    #[test]
    fn auth_failure_is_not_retried() {
        let t = Scripted::new(vec![status(401)]);
        assert!(matches!(
            LlmClient::new(config(), &t).translate("q"),
            Err(LlmError::AuthError(_))
        ));
        assert_eq!(t.requests.borrow().len(), 1);
    }

    #[test]
    fn server_errors_are_retried() {
        let t = Scripted::new(vec![status(503), ok("Draw('Point')")]);
        let r = LlmClient::new(config(), &t).translate("q").unwrap();
        assert_eq!(r.attempts, 2);
    }

    #[test]
    fn empty_completion() {
        let t = Scripted::new(vec![ok("   ")]);
        assert_eq!(
            LlmClient::new(config(), &t).translate("q"),
            Err(LlmError::EmptyCompletion)
        );
    }

    #[test]
    fn missing_key_is_auth_error() {
        // Only meaningful when the variable is absent from the test environment.
        if std::env::var(API_KEY_ENV).is_err() {
            assert!(matches!(
                LlmConfig::from_env("http://x", "m"),
                Err(LlmError::AuthError(_))
            ));
        }
    }
}
