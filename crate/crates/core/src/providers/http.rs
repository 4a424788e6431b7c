//! OpenAI-compatible HTTP client for chat and embedding endpoints.

use std::time::Duration;

use serde_json::{json, Value};

use super::{ChatModel, ChatRequest, Embedder, EmbeddingVector, Limiter, ProviderConfig, ProviderError, ProviderResult};

pub struct HttpClient {
    cfg: ProviderConfig,
    agent: ureq::Agent,
    api_key: String,
    limiter: Limiter,
}

impl HttpClient {
    /// Reads the key from the environment variable named by `api_key_ref`.
    pub fn from_config(cfg: ProviderConfig) -> ProviderResult<Self> {
        cfg.validate()?;
        let api_key = std::env::var(&cfg.api_key_ref)
            .map_err(|_| ProviderError::Auth(format!("environment variable {} is not set", cfg.api_key_ref)))?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(cfg.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        let limiter = Limiter::new(cfg.parallelism_limit);
        Ok(HttpClient {
            cfg,
            agent,
            api_key,
            limiter,
        })
    }

    fn url(&self, path: &str) -> String {
        format!("{}/{}", self.cfg.endpoint_url.trim_end_matches('/'), path)
    }

    fn post(&self, path: &str, body: &Value) -> ProviderResult<Value> {
        self.limiter.run(|| {
            let mut resp = self
                .agent
                .post(&self.url(path))
                .header("Authorization", &format!("Bearer {}", self.api_key))
                .send_json(body)
                .map_err(|e| ProviderError::Transport(e.to_string()))?;
            let status = resp.status().as_u16();
            let text = resp
                .body_mut()
                .read_to_string()
                .map_err(|e| ProviderError::Transport(e.to_string()))?;
            match status {
                200..=299 => serde_json::from_str(&text)
                    .map_err(|e| ProviderError::Transport(format!("malformed response body: {e}"))),
                401 | 403 => Err(ProviderError::Auth(format!("HTTP {status}"))),
                _ => Err(ProviderError::Transport(format!("HTTP {status}: {text}"))),
            }
        })
    }
}

pub fn chat_body(model: &str, req: &ChatRequest) -> Value {
    json!({
        "model": model,
        "messages": [
            {"role": "system", "content": req.system_prompt},
            {"role": "user", "content": req.user_prompt},
        ],
        "temperature": 0,
    })
}

pub fn parse_chat_response(v: &Value) -> ProviderResult<String> {
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| ProviderError::Transport("response lacks choices[0].message.content".into()))
}

pub fn parse_embedding_response(v: &Value) -> ProviderResult<Vec<EmbeddingVector>> {
    let data = v
        .get("data")
        .and_then(Value::as_array)
        .ok_or_else(|| ProviderError::Transport("response lacks data[]".into()))?;
    let mut rows: Vec<(u64, EmbeddingVector)> = Vec::with_capacity(data.len());
    for (pos, item) in data.iter().enumerate() {
        let index = item.get("index").and_then(Value::as_u64).unwrap_or(pos as u64);
        let values = item
            .get("embedding")
            .and_then(Value::as_array)
            .ok_or_else(|| ProviderError::Transport("embedding entry lacks a vector".into()))?
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| ProviderError::Transport("non-numeric embedding".into())))
            .collect::<ProviderResult<Vec<f64>>>()?;
        rows.push((index, EmbeddingVector(values)));
    }
    rows.sort_by_key(|(i, _)| *i);
    Ok(rows.into_iter().map(|(_, v)| v).collect())
}

impl ChatModel for HttpClient {
    fn complete(&self, req: &ChatRequest) -> ProviderResult<String> {
        let v = self.post("chat/completions", &chat_body(&self.cfg.model_name, req))?;
        parse_chat_response(&v)
    }
}

impl Embedder for HttpClient {
    fn embed_batch(&self, texts: &[String]) -> ProviderResult<Vec<EmbeddingVector>> {
        let v = self.post("embeddings", &json!({"model": self.cfg.model_name, "input": texts}))?;
        parse_embedding_response(&v)
    }
}
