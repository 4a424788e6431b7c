//! The single boundary to stochastic model services: chat completion, text
//! embedding, preference scoring and pairwise judging.
//!
//! Every engine stage talks to models through the traits here, so the whole
//! pipeline runs offline against [`mock`] implementations and can be
//! recorded to, and replayed from, a JSON-lines transcript.

pub mod http;
pub mod mock;
pub mod transcript;

use std::sync::{Condvar, Mutex};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::prompts;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProviderError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("reply unparseable after {attempts} attempt(s): {last_error}")]
    Schema { attempts: u32, last_error: String },
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("embedding dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("no recorded response for request {0}")]
    ReplayMiss(String),
}

pub type ProviderResult<T> = Result<T, ProviderError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderConfig {
    pub endpoint_url: String,
    /// Name of the environment variable holding the API key.
    pub api_key_ref: String,
    pub model_name: String,
    pub timeout_secs: f64,
    pub max_retries: u32,
    pub parallelism_limit: usize,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            endpoint_url: "http://localhost:8000/v1".into(),
            api_key_ref: "OPENAI_API_KEY".into(),
            model_name: "mock".into(),
            timeout_secs: 120.0,
            max_retries: 2,
            parallelism_limit: 4,
        }
    }
}

impl ProviderConfig {
    pub fn validate(&self) -> ProviderResult<()> {
        if !(self.timeout_secs.is_finite() && self.timeout_secs > 0.0) {
            return Err(ProviderError::InvalidRequest("timeout must be > 0".into()));
        }
        if self.parallelism_limit == 0 {
            return Err(ProviderError::InvalidRequest("parallelism_limit must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChatRequest {
    pub system_prompt: String,
    pub user_prompt: String,
    /// The reply must parse as a declared schema; parse failures re-prompt.
    pub expects_structured: bool,
}

impl ChatRequest {
    pub fn structured(system_prompt: impl Into<String>, user_prompt: impl Into<String>) -> Self {
        ChatRequest {
            system_prompt: system_prompt.into(),
            user_prompt: user_prompt.into(),
            expects_structured: true,
        }
    }

    pub fn plain(system_prompt: impl Into<String>, user_prompt: impl Into<String>) -> Self {
        ChatRequest {
            expects_structured: false,
            ..ChatRequest::structured(system_prompt, user_prompt)
        }
    }

    /// Hex SHA-256 over the canonical JSON encoding of the request.
    pub fn hash(&self) -> String {
        request_hash(&serde_json::to_value(self).expect("chat request serializes"))
    }
}

pub fn request_hash(request: &serde_json::Value) -> String {
    hex::encode(Sha256::digest(serde_json::to_vec(request).expect("json value serializes")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(pub Vec<f64>);

impl EmbeddingVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Cosine similarity; `None` when either vector has zero norm.
    pub fn cosine(&self, other: &EmbeddingVector) -> Option<f64> {
        let (na, nb) = (self.norm(), other.norm());
        if na == 0.0 || nb == 0.0 || self.dim() != other.dim() {
            return None;
        }
        let dot: f64 = self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum();
        Some(dot / (na * nb))
    }
}

pub trait ChatModel: Send + Sync {
    fn complete(&self, req: &ChatRequest) -> ProviderResult<String>;
}

pub trait Embedder: Send + Sync {
    fn embed_batch(&self, texts: &[String]) -> ProviderResult<Vec<EmbeddingVector>>;
}

pub trait PreferenceModel: Send + Sync {
    /// Raw reward-model output for a query and a serialized itinerary.
    fn raw_score(&self, query: &str, itinerary_text: &str) -> ProviderResult<f64>;
}

impl<T: ChatModel + ?Sized> ChatModel for std::sync::Arc<T> {
    fn complete(&self, req: &ChatRequest) -> ProviderResult<String> {
        (**self).complete(req)
    }
}

impl<T: Embedder + ?Sized> Embedder for std::sync::Arc<T> {
    fn embed_batch(&self, texts: &[String]) -> ProviderResult<Vec<EmbeddingVector>> {
        (**self).embed_batch(texts)
    }
}

impl<T: PreferenceModel + ?Sized> PreferenceModel for std::sync::Arc<T> {
    fn raw_score(&self, query: &str, itinerary_text: &str) -> ProviderResult<f64> {
        (**self).raw_score(query, itinerary_text)
    }
}

fn check_request(req: &ChatRequest) -> ProviderResult<()> {
    if req.user_prompt.trim().is_empty() {
        return Err(ProviderError::InvalidRequest("user prompt is empty".into()));
    }
    if req.system_prompt.trim().is_empty() {
        return Err(ProviderError::InvalidRequest("system prompt is empty".into()));
    }
    Ok(())
}

/// One unstructured chat call.
pub fn chat(model: &dyn ChatModel, req: &ChatRequest, cfg: &ProviderConfig) -> ProviderResult<String> {
    check_request(req)?;
    cfg.validate()?;
    model.complete(req)
}

/// Chat call whose reply must satisfy `parse`. On failure the request is
/// re-sent with the parse error appended, at most `cfg.max_retries` times.
pub fn chat_structured<T>(
    model: &dyn ChatModel,
    req: &ChatRequest,
    cfg: &ProviderConfig,
    parse: impl Fn(&str) -> Result<T, String>,
) -> ProviderResult<T> {
    check_request(req)?;
    cfg.validate()?;
    let mut current = req.clone();
    let mut last_error = String::new();
    for attempt in 0..=cfg.max_retries {
        let reply = model.complete(&current)?;
        match parse(&reply) {
            Ok(v) => return Ok(v),
            Err(e) => {
                log::warn!("structured reply rejected on attempt {}: {e}", attempt + 1);
                last_error = e;
                current = ChatRequest {
                    user_prompt: format!("{}{}", req.user_prompt, prompts::repair_suffix(&last_error)),
                    ..req.clone()
                };
            }
        }
    }
    Err(ProviderError::Schema {
        attempts: cfg.max_retries + 1,
        last_error,
    })
}

/// The single document inside a reply: the first fenced block when present,
/// otherwise the trimmed text.
pub fn extract_document(reply: &str) -> &str {
    if let Some(start) = reply.find("```") {
        let after = &reply[start + 3..];
        let body_start = after.find('\n').map_or(after.len(), |i| i + 1);
        let body = &after[body_start..];
        if let Some(end) = body.find("```") {
            return body[..end].trim();
        }
    }
    reply.trim()
}

/// Parse the reply's document as JSON, tolerating prose around a single
/// top-level object or array.
pub fn parse_json_document<T: serde::de::DeserializeOwned>(reply: &str) -> Result<T, String> {
    let doc = extract_document(reply);
    match serde_json::from_str(doc) {
        Ok(v) => Ok(v),
        Err(first) => {
            let open = doc.find(['{', '[']).ok_or_else(|| first.to_string())?;
            let close_char = if doc.as_bytes()[open] == b'{' { '}' } else { ']' };
            let close = doc.rfind(close_char).ok_or_else(|| first.to_string())?;
            if close <= open {
                return Err(first.to_string());
            }
            serde_json::from_str(&doc[open..=close]).map_err(|e| e.to_string())
        }
    }
}

/// Embed `texts`; every vector must share one dimension.
pub fn embed(embedder: &dyn Embedder, texts: &[String]) -> ProviderResult<Vec<EmbeddingVector>> {
    if texts.is_empty() {
        return Err(ProviderError::InvalidRequest("no texts to embed".into()));
    }
    let out = embedder.embed_batch(texts)?;
    if out.len() != texts.len() {
        return Err(ProviderError::InvalidRequest(format!(
            "embedder returned {} vectors for {} texts",
            out.len(),
            texts.len()
        )));
    }
    let dim = out[0].dim();
    for v in &out {
        if v.dim() != dim {
            return Err(ProviderError::DimensionMismatch {
                expected: dim,
                got: v.dim(),
            });
        }
        if v.0.iter().any(|x| !x.is_finite()) {
            return Err(ProviderError::InvalidRequest("embedding has non-finite entries".into()));
        }
    }
    Ok(out)
}

/// Wraps an embedder and pins the dimension seen on the first call.
pub struct EmbeddingSession<E> {
    inner: E,
    dim: Mutex<Option<usize>>,
}

impl<E: Embedder> EmbeddingSession<E> {
    pub fn new(inner: E) -> Self {
        EmbeddingSession {
            inner,
            dim: Mutex::new(None),
        }
    }
}

impl<E: Embedder> Embedder for EmbeddingSession<E> {
    fn embed_batch(&self, texts: &[String]) -> ProviderResult<Vec<EmbeddingVector>> {
        let out = embed(&self.inner, texts)?;
        let mut pinned = self.dim.lock().expect("dimension lock poisoned");
        let got = out[0].dim();
        match *pinned {
            Some(expected) if expected != got => {
                return Err(ProviderError::DimensionMismatch { expected, got })
            }
            None => *pinned = Some(got),
            _ => {}
        }
        Ok(out)
    }
}

pub fn score_preference(
    model: &dyn PreferenceModel,
    query: &str,
    itinerary_text: &str,
) -> ProviderResult<f64> {
    if query.trim().is_empty() || itinerary_text.trim().is_empty() {
        return Err(ProviderError::InvalidRequest("query and itinerary must be non-empty".into()));
    }
    model.raw_score(query, itinerary_text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeVerdict {
    pub score_a: u8,
    pub score_b: u8,
    pub analysis: String,
}

/// Parse the judge's "Scoring Results" block; scores must be integers 1..=5.
pub fn parse_judge_reply(reply: &str) -> Result<JudgeVerdict, String> {
    let (analysis, results) = match reply.find("Scoring Results") {
        Some(i) => (reply[..i].trim_end_matches(|c: char| c == '#' || c.is_whitespace()), &reply[i..]),
        None => ("", reply),
    };
    let value: serde_json::Value = parse_json_document(&results[results.find('{').unwrap_or(0)..])?;
    let scores = value
        .get("Personalization Evaluation")
        .and_then(|v| v.get("Scores"))
        .ok_or("missing \"Personalization Evaluation\".\"Scores\"")?;
    let grab = |key: &str| -> Result<u8, String> {
        let v = scores.get(key).ok_or(format!("missing score for {key}"))?;
        let x = v
            .as_f64()
            .or_else(|| v.as_str().and_then(|s| s.trim().parse().ok()))
            .ok_or(format!("score for {key} is not a number"))?;
        if x.fract() != 0.0 || !(1.0..=5.0).contains(&x) {
            return Err(format!("score for {key} must be an integer in 1..5, got {x}"));
        }
        Ok(x as u8)
    };
    Ok(JudgeVerdict {
        score_a: grab("Plan A")?,
        score_b: grab("Plan B")?,
        analysis: analysis
            .trim_start_matches('#')
            .trim()
            .trim_start_matches("Comparative Analysis:")
            .trim()
            .to_string(),
    })
}

pub fn judge_pair(
    model: &dyn ChatModel,
    query: &str,
    plan_a: &str,
    plan_b: &str,
    cfg: &ProviderConfig,
) -> ProviderResult<JudgeVerdict> {
    if [query, plan_a, plan_b].iter().any(|t| t.trim().is_empty()) {
        return Err(ProviderError::InvalidRequest("judge inputs must be non-empty".into()));
    }
    let req = ChatRequest::structured(
        prompts::JUDGE_SYSTEM,
        prompts::judge_prompt(query, plan_a, plan_b),
    );
    chat_structured(model, &req, cfg, parse_judge_reply)
}

/// Counting semaphore bounding in-flight calls.
#[derive(Debug)]
pub struct Limiter {
    available: Mutex<usize>,
    released: Condvar,
}

impl Limiter {
    pub fn new(limit: usize) -> Self {
        Limiter {
            available: Mutex::new(limit.max(1)),
            released: Condvar::new(),
        }
    }

    pub fn run<T>(&self, f: impl FnOnce() -> T) -> T {
        {
            let mut n = self.available.lock().expect("limiter lock poisoned");
            while *n == 0 {
                n = self.released.wait(n).expect("limiter lock poisoned");
            }
            *n -= 1;
        }
        let out = f();
        *self.available.lock().expect("limiter lock poisoned") += 1;
        self.released.notify_one();
        out
    }
}

/// Apply `f` to every item on scoped threads, at most `limit` at once.
/// Results keep input order.
pub fn map_bounded<I: Sync, T: Send>(items: &[I], limit: usize, f: impl Fn(&I) -> T + Sync) -> Vec<T> {
    if limit <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    let limiter = Limiter::new(limit);
    std::thread::scope(|s| {
        let handles: Vec<_> = items
            .iter()
            .map(|item| {
                let (limiter, f) = (&limiter, &f);
                s.spawn(move || limiter.run(|| f(item)))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("provider worker panicked"))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fenced_document_is_extracted() {
        let reply = "Sure:\n```json\n{\"a\": 1}\n```\nthanks";
        assert_eq!(extract_document(reply), "{\"a\": 1}");
        let v: serde_json::Value = parse_json_document("noise {\"a\": [1,2]} trailing").unwrap();
        assert_eq!(v["a"][1], 2);
    }

    #[test]
    fn judge_reply_parses_and_range_checks() {
        let ok = "#### Comparative Analysis:\nA is richer.\n#### Scoring Results:\n{\"Personalization Evaluation\": {\"Scores\": {\"Plan A\": 4, \"Plan B\": 3}}}";
        let v = parse_judge_reply(ok).unwrap();
        assert_eq!((v.score_a, v.score_b), (4, 3));
        assert_eq!(v.analysis, "A is richer.");
        let bad = ok.replace("\"Plan A\": 4", "\"Plan A\": 6");
        assert!(parse_judge_reply(&bad).is_err());
        assert!(parse_judge_reply("no block").is_err());
    }

    #[test]
    fn cosine_of_zero_vector_is_undefined() {
        let z = EmbeddingVector(vec![0.0, 0.0]);
        let e = EmbeddingVector(vec![1.0, 0.0]);
        assert_eq!(z.cosine(&e), None);
        assert_eq!(e.cosine(&e), Some(1.0));
    }

    #[test]
    fn bounded_map_preserves_order() {
        let items: Vec<u32> = (0..20).collect();
        let out = map_bounded(&items, 3, |x| x * 2);
        assert_eq!(out, items.iter().map(|x| x * 2).collect::<Vec<_>>());
    }
}
