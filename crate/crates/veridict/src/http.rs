//! Blocking HTTP clients: a chat-completions LLM backend and the model
//! sidecar (`/ner`, `/embed`, `/nli`).

use std::collections::HashMap;
use std::sync::Mutex;
use std::time::Duration;

use serde::Deserialize;
use serde_json::{json, Value};
use veridict_core::embedding::Embedder;
use veridict_core::metrics::{Nli, NliScores};
use veridict_core::orchestrator::{GenerationRequest, Generator, Pause};
use veridict_core::recognizers::{EntityMention, MentionKind, Recognizer};
use veridict_core::BackendError;

use crate::config::BackendSection;

/// Largest batch the sidecar accepts on `/embed`.
pub const EMBED_BATCH: usize = 256;

/// Retry backoff that really sleeps.
#[derive(Debug, Clone, Copy, Default)]
pub struct ThreadSleep;

impl Pause for ThreadSleep {
    fn pause(&self, duration: Duration) {
        std::thread::sleep(duration);
    }
}

fn agent(timeout: Duration) -> ureq::Agent {
    ureq::AgentBuilder::new().timeout(timeout).build()
}

fn post_json(agent: &ureq::Agent, url: &str, bearer: Option<&str>, body: Value) -> Result<Value, BackendError> {
    let mut req = agent.post(url);
    if let Some(key) = bearer {
        req = req.set("Authorization", &format!("Bearer {key}"));
    }
    match req.send_json(body) {
        Ok(resp) => resp.into_json::<Value>().map_err(|e| BackendError::Malformed(e.to_string())),
        Err(ureq::Error::Status(code, resp)) => {
            let retry_after = resp
                .header("Retry-After")
                .and_then(|v| v.trim().parse::<f64>().ok())
                .filter(|s| s.is_finite() && *s >= 0.0)
                .map(Duration::from_secs_f64);
            let body = resp.into_string().unwrap_or_default();
            Err(match code {
                429 => BackendError::RateLimited { retry_after },
                500..=599 => BackendError::Unavailable(format!("HTTP {code}: {}", body.trim())),
                _ => BackendError::Rejected(format!("HTTP {code}: {}", body.trim())),
            })
        }
        Err(e) => Err(BackendError::Unavailable(e.to_string())),
    }
}

/// OpenAI-style `POST <base_url>/chat/completions`.
pub struct ChatCompletionsBackend {
    id: String,
    url: String,
    model: String,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl ChatCompletionsBackend {
    pub fn new(id: impl Into<String>, base_url: &str, model: impl Into<String>, api_key: Option<String>, timeout: Duration) -> Self {
        Self {
            id: id.into(),
            url: format!("{}/chat/completions", base_url.trim_end_matches('/')),
            model: model.into(),
            api_key,
            agent: agent(timeout),
        }
    }

    /// Reads the key from the configured environment variable, if set.
    pub fn from_config(id: &str, section: &BackendSection) -> Self {
        let key = std::env::var(&section.api_key_env).ok().filter(|k| !k.is_empty());
        Self::new(id, &section.base_url, section.model.clone(), key, Duration::from_secs(section.timeout_secs))
    }
}

impl Generator for ChatCompletionsBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn generate(&self, request: &GenerationRequest) -> Result<String, BackendError> {
        let body = json!({
            "model": self.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "max_tokens": request.max_response_tokens,
            "temperature": request.temperature,
        });
        let v = post_json(&self.agent, &self.url, self.api_key.as_deref(), body)?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| BackendError::Malformed("missing choices[0].message.content".into()))
    }
}

/// The endpoint body, unwrapped from a `{model_id, elapsed_ms, payload}`
/// envelope when one is present.
fn payload(v: Value) -> Value {
    match v {
        Value::Object(mut m) if m.contains_key("payload") => m.remove("payload").unwrap_or(Value::Null),
        other => other,
    }
}

#[derive(Deserialize)]
struct NerMention {
    #[serde(default)]
    surface: Option<String>,
    start: usize,
    end: usize,
    #[serde(default)]
    kind: Option<String>,
}

#[derive(Deserialize)]
struct NerBody {
    mentions: Vec<NerMention>,
}

#[derive(Deserialize)]
struct EmbedBody {
    vectors: Vec<Vec<f32>>,
}

#[derive(Deserialize)]
struct NliBody {
    entail: f64,
    neutral: f64,
    contradict: f64,
}

/// Client for the model sidecar. Responses are cached per input for the
/// lifetime of the client.
pub struct SidecarClient {
    base: String,
    agent: ureq::Agent,
    ner_cache: Mutex<HashMap<String, Vec<EntityMention>>>,
    embed_cache: Mutex<HashMap<String, Vec<f32>>>,
    nli_cache: Mutex<HashMap<(String, String), NliScores>>,
}

impl SidecarClient {
    pub fn new(base_url: &str) -> Self {
        Self::with_timeout(base_url, Duration::from_secs(120))
    }

    pub fn with_timeout(base_url: &str, timeout: Duration) -> Self {
        Self {
            base: base_url.trim_end_matches('/').to_string(),
            agent: agent(timeout),
            ner_cache: Mutex::default(),
            embed_cache: Mutex::default(),
            nli_cache: Mutex::default(),
        }
    }

    fn call(&self, endpoint: &str, body: Value) -> Result<Value, BackendError> {
        post_json(&self.agent, &format!("{}{endpoint}", self.base), None, body).map(payload)
    }

    /// Entity mentions from `/ner`. The sidecar reports character offsets;
    /// they are converted to byte offsets and checked against the text.
    pub fn ner(&self, text: &str) -> Result<Vec<EntityMention>, BackendError> {
        if let Some(hit) = self.ner_cache.lock().expect("cache lock").get(text) {
            return Ok(hit.clone());
        }
        let body: NerBody = serde_json::from_value(self.call("/ner", json!({ "text": text }))?)
            .map_err(|e| BackendError::Malformed(format!("/ner: {e}")))?;
        let mut byte_at: Vec<usize> = text.char_indices().map(|(b, _)| b).collect();
        byte_at.push(text.len());
        let mut out = Vec::with_capacity(body.mentions.len());
        for m in body.mentions {
            if m.kind.as_deref() == Some(MentionKind::Number.as_str()) {
                continue;
            }
            if m.start >= m.end || m.end >= byte_at.len() {
                return Err(BackendError::Malformed(format!("/ner: span {}..{} out of bounds", m.start, m.end)));
            }
            let (s, e) = (byte_at[m.start], byte_at[m.end]);
            if m.surface.as_deref().is_some_and(|sf| sf != &text[s..e]) {
                return Err(BackendError::Malformed(format!("/ner: surface does not match span {}..{}", m.start, m.end)));
            }
            out.push(EntityMention::new(text, MentionKind::NamedEntity, s, e));
        }
        out.sort_by_key(|m| m.span);
        self.ner_cache.lock().expect("cache lock").insert(text.to_string(), out.clone());
        Ok(out)
    }
}

impl Recognizer for SidecarClient {
    fn entities(&self, text: &str) -> Result<Vec<EntityMention>, BackendError> {
        self.ner(text)
    }
}

impl Embedder for SidecarClient {
    fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>, BackendError> {
        let missing: Vec<&str> = {
            let cache = self.embed_cache.lock().expect("cache lock");
            let mut seen = std::collections::BTreeSet::new();
            texts.iter().copied().filter(|t| !cache.contains_key(*t) && seen.insert(*t)).collect()
        };
        for batch in missing.chunks(EMBED_BATCH) {
            let body: EmbedBody = serde_json::from_value(self.call("/embed", json!({ "texts": batch }))?)
                .map_err(|e| BackendError::Malformed(format!("/embed: {e}")))?;
            if body.vectors.len() != batch.len() {
                return Err(BackendError::Malformed(format!(
                    "/embed: {} vectors for {} texts",
                    body.vectors.len(),
                    batch.len()
                )));
            }
            let mut cache = self.embed_cache.lock().expect("cache lock");
            for (t, v) in batch.iter().zip(body.vectors) {
                cache.insert((*t).to_string(), v);
            }
        }
        let cache = self.embed_cache.lock().expect("cache lock");
        Ok(texts.iter().map(|t| cache[*t].clone()).collect())
    }
}

impl Nli for SidecarClient {
    fn classify(&self, premise: &str, hypothesis: &str) -> Result<NliScores, BackendError> {
        let key = (premise.to_string(), hypothesis.to_string());
        if let Some(hit) = self.nli_cache.lock().expect("cache lock").get(&key) {
            return Ok(*hit);
        }
        let b: NliBody = serde_json::from_value(self.call("/nli", json!({ "premise": premise, "hypothesis": hypothesis }))?)
            .map_err(|e| BackendError::Malformed(format!("/nli: {e}")))?;
        let scores = NliScores { entail: b.entail, neutral: b.neutral, contradict: b.contradict };
        self.nli_cache.lock().expect("cache lock").insert(key, scores);
        Ok(scores)
    }
}
