//! Optional chat-completion client that expands an assembled attribute
//! prompt into richer natural language, with a deterministic fallback.
//!
//! The pipeline must never block on or be corrupted by the external service,
//! so every path ends in a usable prompt:
//!
//! * disabled → the profile's template prompt, unchanged;
//! * transport errors → retried up to the configured budget, then fallback;
//! * malformed response body → immediate fallback;
//! * response that fails attribute validation (every selected attribute
//!   label must appear, case-insensitively) → at most one retry within the
//!   budget, then fallback.
//!
//! At most `max_retries + 1` requests are ever sent per prompt, so the worst
//! case is bounded by `(max_retries + 1) · timeout`.
//!
//! Transports are pluggable: [`HttpTransport`] talks to an OpenAI-compatible
//! endpoint, [`ReplayTransport`] serves a recorded [`Transcript`] offline
//! (the deterministic test path), and [`RecordingTransport`] captures a
//! transcript while delegating to another transport.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::attrs::IdentityProfile;
use crate::error::{Error, Result};

/// Environment variable read for the bearer token, if the service needs one.
pub const API_KEY_ENV: &str = "IDENTIKIT_API_KEY";

/// Default instruction sent as the system message. Our own wording.
pub const DEFAULT_SYSTEM_PROMPT: &str = "You rewrite terse face-portrait prompts into one richer \
natural-language description. Mention every attribute from the input prompt explicitly, \
invent no new identity attributes, and reply with the rewritten prompt only.";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlmConfig {
    /// Chat-completions URL, e.g. `http://127.0.0.1:8080/v1/chat/completions`.
    pub endpoint: String,
    /// Model identifier understood by the server.
    pub model: String,
    /// Per-request timeout in seconds (> 0).
    pub timeout_secs: f64,
    /// Extra requests allowed after the first one.
    pub max_retries: u32,
    pub temperature: f64,
    /// When false, expansion is a no-op and the template prompt is used.
    pub enabled: bool,
    /// Maximum in-flight requests for batch expansion (≥ 1).
    pub concurrency: usize,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            endpoint: "http://127.0.0.1:8080/v1/chat/completions".into(),
            model: "local-chat".into(),
            timeout_secs: 30.0,
            max_retries: 2,
            temperature: 0.0,
            enabled: false,
            concurrency: 1,
        }
    }
}

impl LlmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.timeout_secs.is_finite() && self.timeout_secs > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "timeout_secs must be positive, got {}",
                self.timeout_secs
            )));
        }
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "temperature must be finite and non-negative, got {}",
                self.temperature
            )));
        }
        if self.concurrency == 0 {
            return Err(Error::InvalidConfig("concurrency must be ≥ 1".into()));
        }
        if self.enabled && self.endpoint.is_empty() {
            return Err(Error::InvalidConfig(
                "endpoint must be set when expansion is enabled".into(),
            ));
        }
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: LlmConfig =
            serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))?;
        config.validate()?;
        Ok(config)
    }
}

/// One chat message in the OpenAI-compatible schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

/// Chat-completion request body (OpenAI-compatible subset).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
}

impl ChatRequest {
    /// Canonical JSON used as the replay key: object keys sorted recursively,
    /// so hand-edited transcripts still match.
    fn canonical_key(&self) -> String {
        let value = serde_json::to_value(self).expect("request serializes");
        canonical_json(&value)
    }
}

fn canonical_json(value: &serde_json::Value) -> String {
    match value {
        serde_json::Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            let inner: Vec<String> = keys
                .iter()
                .map(|k| {
                    format!(
                        "{}:{}",
                        serde_json::Value::String((*k).clone()),
                        canonical_json(&map[*k])
                    )
                })
                .collect();
            format!("{{{}}}", inner.join(","))
        }
        serde_json::Value::Array(items) => {
            let inner: Vec<String> = items.iter().map(canonical_json).collect();
            format!("[{}]", inner.join(","))
        }
        other => other.to_string(),
    }
}

/// Extract `choices[0].message.content`; `None` marks a malformed response.
fn response_text(response: &serde_json::Value) -> Option<&str> {
    response
        .get("choices")?
        .get(0)?
        .get("message")?
        .get("content")?
        .as_str()
}

/// Something that can answer one chat request.
pub trait ChatTransport: Send + Sync {
    fn send(&self, request: &ChatRequest) -> Result<serde_json::Value>;
}

/// Live HTTP transport for an OpenAI-compatible endpoint. The bearer token
/// is read from [`API_KEY_ENV`] at construction when present.
pub struct HttpTransport {
    endpoint: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new(config: &LlmConfig) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(std::time::Duration::from_secs_f64(config.timeout_secs))
            .build()
            .map_err(|e| Error::Transport(format!("building HTTP client: {e}")))?;
        Ok(HttpTransport {
            endpoint: config.endpoint.clone(),
            api_key: std::env::var(API_KEY_ENV).ok(),
            client,
        })
    }
}

impl ChatTransport for HttpTransport {
    fn send(&self, request: &ChatRequest) -> Result<serde_json::Value> {
        let mut builder = self.client.post(&self.endpoint).json(request);
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = builder
            .send()
            .map_err(|e| Error::Transport(format!("request to {}: {e}", self.endpoint)))?;
        let status = response.status();
        if !status.is_success() {
            return Err(Error::Transport(format!(
                "{} answered {status}",
                self.endpoint
            )));
        }
        response
            .json()
            .map_err(|e| Error::Transport(format!("decoding response body: {e}")))
    }
}

/// One recorded request/response exchange.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub request: ChatRequest,
    pub response: serde_json::Value,
}

/// A saved sequence of exchanges, replayable offline.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Transcript {
    pub entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::json(path.display().to_string(), e))?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
    }
}

/// Serves recorded responses keyed by canonical request JSON. Repeats of the
/// same request get the same response; unknown requests are transport errors.
pub struct ReplayTransport {
    responses: HashMap<String, serde_json::Value>,
}

impl ReplayTransport {
    pub fn from_transcript(transcript: &Transcript) -> Self {
        let responses = transcript
            .entries
            .iter()
            .map(|e| (e.request.canonical_key(), e.response.clone()))
            .collect();
        ReplayTransport { responses }
    }
}

impl ChatTransport for ReplayTransport {
    fn send(&self, request: &ChatRequest) -> Result<serde_json::Value> {
        self.responses
            .get(&request.canonical_key())
            .cloned()
            .ok_or_else(|| Error::Transport("request not present in replay transcript".into()))
    }
}

/// Delegates to an inner transport while accumulating a [`Transcript`].
pub struct RecordingTransport<T: ChatTransport> {
    inner: T,
    entries: Mutex<Vec<TranscriptEntry>>,
}

impl<T: ChatTransport> RecordingTransport<T> {
    pub fn new(inner: T) -> Self {
        RecordingTransport {
            inner,
            entries: Mutex::new(Vec::new()),
        }
    }

    pub fn transcript(&self) -> Transcript {
        Transcript {
            entries: self.entries.lock().expect("transcript lock").clone(),
        }
    }
}

impl<T: ChatTransport> ChatTransport for RecordingTransport<T> {
    fn send(&self, request: &ChatRequest) -> Result<serde_json::Value> {
        let response = self.inner.send(request)?;
        self.entries.lock().expect("transcript lock").push(TranscriptEntry {
            request: request.clone(),
            response: response.clone(),
        });
        Ok(response)
    }
}

/// Expansion result plus how it was produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpandedPrompt {
    pub text: String,
    /// True when the text is the profile's own template prompt (disabled
    /// expander, exhausted retries, malformed or invalid service output).
    pub used_fallback: bool,
}

/// Counters shared across threads during batch expansion.
#[derive(Debug, Default)]
pub struct ExpandMetrics {
    requests: AtomicU64,
    fallbacks: AtomicU64,
    validation_failures: AtomicU64,
}

/// Point-in-time copy of [`ExpandMetrics`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MetricsSnapshot {
    pub requests: u64,
    pub fallbacks: u64,
    pub validation_failures: u64,
}

impl ExpandMetrics {
    pub fn snapshot(&self) -> MetricsSnapshot {
        MetricsSnapshot {
            requests: self.requests.load(Ordering::Relaxed),
            fallbacks: self.fallbacks.load(Ordering::Relaxed),
            validation_failures: self.validation_failures.load(Ordering::Relaxed),
        }
    }
}

/// Turns a profile's assembled prompt into the final text.
pub trait PromptExpander: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    /// Always returns a usable prompt; failures surface as `used_fallback`.
    fn expand(&self, profile: &IdentityProfile) -> ExpandedPrompt;
}

/// Identity expander: the deterministic template prompt, verbatim.
pub struct TemplateExpander;

impl PromptExpander for TemplateExpander {
    fn name(&self) -> &'static str {
        "template"
    }

    fn description(&self) -> &'static str {
        "use the assembled template prompt verbatim (deterministic)"
    }

    fn expand(&self, profile: &IdentityProfile) -> ExpandedPrompt {
        ExpandedPrompt {
            text: profile.prompt.clone(),
            used_fallback: false,
        }
    }
}

/// Chat-completion expander with validation and template fallback.
pub struct LlmExpander {
    config: LlmConfig,
    transport: Box<dyn ChatTransport>,
    metrics: ExpandMetrics,
}

impl LlmExpander {
    pub fn new(config: LlmConfig, transport: Box<dyn ChatTransport>) -> Result<Self> {
        config.validate()?;
        Ok(LlmExpander {
            config,
            transport,
            metrics: ExpandMetrics::default(),
        })
    }

    /// Build with a live HTTP transport from the config.
    pub fn over_http(config: LlmConfig) -> Result<Self> {
        let transport = HttpTransport::new(&config)?;
        Self::new(config, Box::new(transport))
    }

    pub fn metrics(&self) -> MetricsSnapshot {
        self.metrics.snapshot()
    }

    fn request_for(&self, profile: &IdentityProfile) -> ChatRequest {
        ChatRequest {
            model: self.config.model.clone(),
            messages: vec![
                ChatMessage {
                    role: "system".into(),
                    content: DEFAULT_SYSTEM_PROMPT.into(),
                },
                ChatMessage {
                    role: "user".into(),
                    content: profile.prompt.clone(),
                },
            ],
            temperature: self.config.temperature,
        }
    }
}

/// Every selected attribute label must appear in `text`, case-insensitively.
pub fn mentions_all_attributes(text: &str, profile: &IdentityProfile) -> bool {
    let lower = text.to_lowercase();
    profile
        .selections
        .values()
        .all(|label| lower.contains(&label.to_lowercase()))
}

impl PromptExpander for LlmExpander {
    fn name(&self) -> &'static str {
        "llm"
    }

    fn description(&self) -> &'static str {
        "expand via a chat-completion service, falling back to the template"
    }

    fn expand(&self, profile: &IdentityProfile) -> ExpandedPrompt {
        let fallback = || ExpandedPrompt {
            text: profile.prompt.clone(),
            used_fallback: true,
        };
        if !self.config.enabled {
            self.metrics.fallbacks.fetch_add(1, Ordering::Relaxed);
            return fallback();
        }
        let request = self.request_for(profile);
        // Hard budget on requests: transport errors retry while it lasts, a
        // validation failure spends at most one extra request, a malformed
        // body aborts outright.
        let budget = self.config.max_retries as usize + 1;
        let mut validation_retries_left = 1u32;
        for _ in 0..budget {
            self.metrics.requests.fetch_add(1, Ordering::Relaxed);
            match self.transport.send(&request) {
                Err(e) => {
                    log::warn!("prompt expansion for {}: {e}; retrying", profile.id);
                    continue;
                }
                Ok(body) => match response_text(&body) {
                    None => {
                        log::warn!(
                            "prompt expansion for {}: malformed response body; using template",
                            profile.id
                        );
                        break;
                    }
                    Some(text) => {
                        if mentions_all_attributes(text, profile) {
                            return ExpandedPrompt {
                                text: text.to_string(),
                                used_fallback: false,
                            };
                        }
                        self.metrics
                            .validation_failures
                            .fetch_add(1, Ordering::Relaxed);
                        if validation_retries_left == 0 {
                            break;
                        }
                        validation_retries_left -= 1;
                        log::warn!(
                            "prompt expansion for {}: response dropped an attribute; retrying",
                            profile.id
                        );
                    }
                },
            }
        }
        self.metrics.fallbacks.fetch_add(1, Ordering::Relaxed);
        fallback()
    }
}

/// One-shot convenience wrapper: expand over HTTP per the config, or return
/// the template prompt if even the client cannot be built.
pub fn expand_prompt(profile: &IdentityProfile, config: &LlmConfig) -> ExpandedPrompt {
    if !config.enabled {
        return ExpandedPrompt {
            text: profile.prompt.clone(),
            used_fallback: true,
        };
    }
    match LlmExpander::over_http(config.clone()) {
        Ok(expander) => expander.expand(profile),
        Err(e) => {
            log::warn!("prompt expansion unavailable ({e}); using template");
            ExpandedPrompt {
                text: profile.prompt.clone(),
                used_fallback: true,
            }
        }
    }
}

/// Expand many profiles with at most `concurrency` in-flight expansions.
/// Results come back in input order.
pub fn expand_batch(
    expander: &dyn PromptExpander,
    profiles: &[IdentityProfile],
    concurrency: usize,
) -> Vec<ExpandedPrompt> {
    let workers = concurrency.max(1).min(profiles.len().max(1));
    let next = AtomicUsize::new(0);
    let results: Vec<Mutex<Option<ExpandedPrompt>>> =
        profiles.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= profiles.len() {
                    break;
                }
                let expanded = expander.expand(&profiles[i]);
                *results[i].lock().expect("result slot") = Some(expanded);
            });
        }
    });
    results
        .into_iter()
        .map(|slot| slot.into_inner().expect("result slot").expect("slot filled"))
        .collect()
}

/// Expander lookup by name (`template`, `llm`).
pub fn expander(name: &str, config: &LlmConfig) -> Result<Box<dyn PromptExpander>> {
    match name {
        "template" => Ok(Box::new(TemplateExpander)),
        "llm" => Ok(Box::new(LlmExpander::over_http(config.clone())?)),
        other => Err(Error::UnknownName {
            kind: "prompt expander",
            name: other.to_string(),
            known: expander_names().join(", "),
        }),
    }
}

pub fn expander_names() -> Vec<&'static str> {
    vec!["template", "llm"]
}

#[cfg(test)]
mod tests {
    use super::*;
    use indexmap::IndexMap;

    fn profile() -> IdentityProfile {
        let mut selections = IndexMap::new();
        selections.insert("gender".to_string(), "Female".to_string());
        selections.insert("hairstyle".to_string(), "Curly".to_string());
        IdentityProfile {
            id: "000000".into(),
            generation_index: 0,
            seed: 7,
            selections,
            unsatisfiable: vec![],
            prompt: "A portrait. gender: Female. hairstyle: Curly.".into(),
        }
    }

    fn config(enabled: bool, max_retries: u32) -> LlmConfig {
        LlmConfig {
            enabled,
            max_retries,
            ..LlmConfig::default()
        }
    }

    fn chat_body(text: &str) -> serde_json::Value {
        serde_json::json!({
            "choices": [{"message": {"role": "assistant", "content": text}}]
        })
    }

    /// Transport answering every request with the same body.
    struct StaticTransport(serde_json::Value);

    impl ChatTransport for StaticTransport {
        fn send(&self, _request: &ChatRequest) -> Result<serde_json::Value> {
            Ok(self.0.clone())
        }
    }

    /// Transport that always fails, counting the attempts.
    struct FailingTransport(AtomicU64);

    impl ChatTransport for FailingTransport {
        fn send(&self, _request: &ChatRequest) -> Result<serde_json::Value> {
            self.0.fetch_add(1, Ordering::Relaxed);
            Err(Error::Transport("connection refused".into()))
        }
    }

    #[test]
    fn disabled_expander_returns_template_prompt_verbatim() {
        let expander = LlmExpander::new(
            config(false, 3),
            Box::new(StaticTransport(chat_body("ignored"))),
        )
        .unwrap();
        let p = profile();
        let out = expander.expand(&p);
        assert_eq!(out.text, p.prompt);
        assert!(out.used_fallback);
        assert_eq!(expander.metrics().requests, 0);
        assert_eq!(expander.metrics().fallbacks, 1);
        // The fallback equals the template path byte for byte.
        assert_eq!(out.text, TemplateExpander.expand(&p).text);
    }

    #[test]
    fn valid_response_is_returned() {
        let text = "A studio portrait of a female subject with curly hair.";
        let expander = LlmExpander::new(
            config(true, 0),
            Box::new(StaticTransport(chat_body(text))),
        )
        .unwrap();
        let out = expander.expand(&profile());
        assert_eq!(out.text, text);
        assert!(!out.used_fallback);
        assert_eq!(expander.metrics().requests, 1);
    }

    #[test]
    fn dropped_attribute_gets_one_retry_then_fallback() {
        // "Curly" never appears, so validation fails every time.
        let expander = LlmExpander::new(
            config(true, 5),
            Box::new(StaticTransport(chat_body("A female subject."))),
        )
        .unwrap();
        let p = profile();
        let out = expander.expand(&p);
        assert_eq!(out.text, p.prompt);
        assert!(out.used_fallback);
        assert_eq!(expander.metrics().requests, 2, "exactly one validation retry");
        assert_eq!(expander.metrics().validation_failures, 2);
    }

    #[test]
    fn malformed_body_falls_back_without_retry() {
        let expander = LlmExpander::new(
            config(true, 5),
            Box::new(StaticTransport(serde_json::json!({"unexpected": true}))),
        )
        .unwrap();
        let p = profile();
        let out = expander.expand(&p);
        assert!(out.used_fallback);
        assert_eq!(out.text, p.prompt);
        assert_eq!(expander.metrics().requests, 1);
    }

    #[test]
    fn transport_errors_exhaust_budget_then_fall_back() {
        let transport = FailingTransport(AtomicU64::new(0));
        let expander = LlmExpander::new(config(true, 2), Box::new(transport)).unwrap();
        let p = profile();
        let out = expander.expand(&p);
        assert!(out.used_fallback);
        assert_eq!(out.text, p.prompt);
        assert_eq!(expander.metrics().requests, 3, "1 try + 2 retries");
    }

    #[test]
    fn recorded_transcript_replays_to_identical_output() {
        let text = "Portrait of a female person with curly hair.";
        let recording = RecordingTransport::new(StaticTransport(chat_body(text)));
        let expander = LlmExpander::new(config(true, 0), Box::new(recording)).unwrap();
        let p = profile();
        let live = expander.expand(&p);

        // RecordingTransport was boxed away; rebuild to grab its transcript.
        let recording = RecordingTransport::new(StaticTransport(chat_body(text)));
        recording.send(&expander.request_for(&p)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("transcript.json");
        recording.transcript().save(&path).unwrap();

        let replay = ReplayTransport::from_transcript(&Transcript::load(&path).unwrap());
        let offline = LlmExpander::new(config(true, 0), Box::new(replay)).unwrap();
        let replayed = offline.expand(&p);
        assert_eq!(replayed, live);
        assert!(!replayed.used_fallback);
    }

    #[test]
    fn replay_misses_are_transport_errors_leading_to_fallback() {
        let replay = ReplayTransport::from_transcript(&Transcript::default());
        let expander = LlmExpander::new(config(true, 1), Box::new(replay)).unwrap();
        let p = profile();
        let out = expander.expand(&p);
        assert!(out.used_fallback);
        assert_eq!(out.text, p.prompt);
    }

    #[test]
    fn batch_preserves_input_order_under_concurrency() {
        let profiles: Vec<IdentityProfile> = (0..17)
            .map(|i| {
                let mut p = profile();
                p.id = format!("{i:06}");
                p.prompt = format!("prompt number {i}");
                p
            })
            .collect();
        let outputs = expand_batch(&TemplateExpander, &profiles, 4);
        assert_eq!(outputs.len(), profiles.len());
        for (i, out) in outputs.iter().enumerate() {
            assert_eq!(out.text, format!("prompt number {i}"));
        }
    }

    #[test]
    fn registry_knows_template_and_rejects_unknown() {
        let config = LlmConfig::default();
        assert_eq!(expander("template", &config).unwrap().name(), "template");
        assert_eq!(expander("llm", &config).unwrap().name(), "llm");
        match expander("chatty", &config) {
            Ok(_) => panic!("unknown expander accepted"),
            Err(e) => {
                let msg = e.to_string();
                assert!(msg.contains("chatty") && msg.contains("template"), "{msg}");
            }
        }
    }

    #[test]
    fn canonical_key_ignores_object_key_order() {
        let a: serde_json::Value =
            serde_json::from_str(r#"{"b": 1, "a": [{"y": 2, "x": 3}]}"#).unwrap();
        let b: serde_json::Value =
            serde_json::from_str(r#"{"a": [{"x": 3, "y": 2}], "b": 1}"#).unwrap();
        assert_eq!(canonical_json(&a), canonical_json(&b));
    }

    #[test]
    fn http_transport_round_trip_over_loopback() {
        use std::io::{Read, Write};
        // One-shot HTTP server on a loopback socket.
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let body = chat_body("A female face with curly hair.").to_string();
        let server = std::thread::spawn(move || {
            let (mut stream, _) = listener.accept().unwrap();
            let mut buffer = [0u8; 65536];
            let mut request = Vec::new();
            // Read until the end of headers, then the declared body length.
            loop {
                let n = stream.read(&mut buffer).unwrap();
                request.extend_from_slice(&buffer[..n]);
                if let Some(split) = request.windows(4).position(|w| w == b"\r\n\r\n") {
                    let headers = String::from_utf8_lossy(&request[..split]).to_lowercase();
                    let length: usize = headers
                        .lines()
                        .find_map(|l| l.strip_prefix("content-length:"))
                        .map(|v| v.trim().parse().unwrap())
                        .unwrap_or(0);
                    if request.len() >= split + 4 + length {
                        break;
                    }
                }
            }
            let reply = format!(
                "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{}",
                body.len(),
                body
            );
            stream.write_all(reply.as_bytes()).unwrap();
        });

        let llm_config = LlmConfig {
            endpoint: format!("http://{addr}/v1/chat/completions"),
            enabled: true,
            timeout_secs: 10.0,
            max_retries: 0,
            ..LlmConfig::default()
        };
        let expander = LlmExpander::over_http(llm_config).unwrap();
        let out = expander.expand(&profile());
        server.join().unwrap();
        assert!(!out.used_fallback, "loopback expansion fell back: {}", out.text);
        assert_eq!(out.text, "A female face with curly hair.");
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        let mut c = LlmConfig::default();
        c.timeout_secs = 0.0;
        assert!(c.validate().is_err());
        let mut c = LlmConfig::default();
        c.concurrency = 0;
        assert!(c.validate().is_err());
        let mut c = LlmConfig {
            enabled: true,
            ..LlmConfig::default()
        };
        c.endpoint.clear();
        assert!(c.validate().is_err());
    }
}
