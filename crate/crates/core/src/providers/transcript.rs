//! JSON-lines transcripts of provider calls, for recording and replay.

use std::collections::{HashMap, VecDeque};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{
    request_hash, ChatModel, ChatRequest, Embedder, EmbeddingVector, PreferenceModel, ProviderError, ProviderResult,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub request_hash: String,
    pub request: Value,
    pub response: Value,
    pub latency_ms: u64,
}

fn chat_request_value(req: &ChatRequest) -> Value {
    json!({"kind": "chat", "request": req})
}

fn embed_request_value(texts: &[String]) -> Value {
    json!({"kind": "embed", "texts": texts})
}

fn preference_request_value(query: &str, itinerary: &str) -> Value {
    json!({"kind": "preference", "query": query, "itinerary": itinerary})
}

/// Shared sink for records; optionally mirrored to a file as they arrive.
pub struct TranscriptSink {
    records: Mutex<Vec<TranscriptRecord>>,
    file: Option<Mutex<BufWriter<File>>>,
}

impl TranscriptSink {
    pub fn in_memory() -> Self {
        TranscriptSink {
            records: Mutex::new(Vec::new()),
            file: None,
        }
    }

    pub fn to_file(path: impl AsRef<Path>) -> std::io::Result<Self> {
        Ok(TranscriptSink {
            records: Mutex::new(Vec::new()),
            file: Some(Mutex::new(BufWriter::new(File::create(path)?))),
        })
    }

    fn push(&self, request: Value, response: Value, started: Instant) {
        let rec = TranscriptRecord {
            request_hash: request_hash(&request),
            request,
            response,
            latency_ms: started.elapsed().as_millis() as u64,
        };
        if let Some(f) = &self.file {
            let mut w = f.lock().expect("transcript writer poisoned");
            let line = serde_json::to_string(&rec).expect("record serializes");
            if let Err(e) = writeln!(w, "{line}").and_then(|_| w.flush()) {
                log::error!("failed to append transcript record: {e}");
            }
        }
        self.records.lock().expect("transcript poisoned").push(rec);
    }

    pub fn records(&self) -> Vec<TranscriptRecord> {
        self.records.lock().expect("transcript poisoned").clone()
    }
}

/// Forwards to an inner provider and appends each successful call to a sink.
pub struct Recording<'a, M> {
    pub inner: M,
    pub sink: &'a TranscriptSink,
}

impl<M: ChatModel> ChatModel for Recording<'_, M> {
    fn complete(&self, req: &ChatRequest) -> ProviderResult<String> {
        let t = Instant::now();
        let out = self.inner.complete(req)?;
        self.sink.push(chat_request_value(req), Value::String(out.clone()), t);
        Ok(out)
    }
}

impl<M: Embedder> Embedder for Recording<'_, M> {
    fn embed_batch(&self, texts: &[String]) -> ProviderResult<Vec<EmbeddingVector>> {
        let t = Instant::now();
        let out = self.inner.embed_batch(texts)?;
        self.sink.push(embed_request_value(texts), serde_json::to_value(&out).expect("vectors serialize"), t);
        Ok(out)
    }
}

impl<M: PreferenceModel> PreferenceModel for Recording<'_, M> {
    fn raw_score(&self, query: &str, itinerary_text: &str) -> ProviderResult<f64> {
        let t = Instant::now();
        let out = self.inner.raw_score(query, itinerary_text)?;
        self.sink.push(preference_request_value(query, itinerary_text), json!(out), t);
        Ok(out)
    }
}

/// Serves responses from a transcript. Repeated identical requests are
/// answered in recorded order; a request never recorded is a replay miss.
#[derive(Debug, Default)]
pub struct Replay {
    queues: Mutex<HashMap<String, VecDeque<Value>>>,
}

impl Replay {
    pub fn from_records(records: impl IntoIterator<Item = TranscriptRecord>) -> Self {
        let mut queues: HashMap<String, VecDeque<Value>> = HashMap::new();
        for r in records {
            queues.entry(r.request_hash).or_default().push_back(r.response);
        }
        Replay {
            queues: Mutex::new(queues),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let reader = BufReader::new(File::open(path)?);
        let mut records = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: TranscriptRecord = serde_json::from_str(&line).map_err(|e| {
                std::io::Error::new(std::io::ErrorKind::InvalidData, format!("transcript line {}: {e}", n + 1))
            })?;
            records.push(rec);
        }
        Ok(Replay::from_records(records))
    }

    fn take(&self, request: &Value) -> ProviderResult<Value> {
        let h = request_hash(request);
        let mut q = self.queues.lock().expect("replay poisoned");
        q.get_mut(&h)
            .and_then(VecDeque::pop_front)
            .ok_or(ProviderError::ReplayMiss(h))
    }
}

fn malformed(what: &str) -> ProviderError {
    ProviderError::Transport(format!("transcript holds a malformed {what} response"))
}

impl ChatModel for Replay {
    fn complete(&self, req: &ChatRequest) -> ProviderResult<String> {
        match self.take(&chat_request_value(req))? {
            Value::String(s) => Ok(s),
            _ => Err(malformed("chat")),
        }
    }
}

impl Embedder for Replay {
    fn embed_batch(&self, texts: &[String]) -> ProviderResult<Vec<EmbeddingVector>> {
        serde_json::from_value(self.take(&embed_request_value(texts))?).map_err(|_| malformed("embedding"))
    }
}

impl PreferenceModel for Replay {
    fn raw_score(&self, query: &str, itinerary_text: &str) -> ProviderResult<f64> {
        self.take(&preference_request_value(query, itinerary_text))?
            .as_f64()
            .ok_or_else(|| malformed("preference"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::mock::{HashEmbedder, ScriptedChat};

    #[test]
    fn recorded_calls_replay_in_order() {
        let sink = TranscriptSink::in_memory();
        let rec = Recording {
            inner: ScriptedChat::new(["one", "two"]),
            sink: &sink,
        };
        let req = ChatRequest::plain("s", "u");
        assert_eq!(rec.complete(&req).unwrap(), "one");
        assert_eq!(rec.complete(&req).unwrap(), "two");
        let emb = Recording {
            inner: HashEmbedder::new(1),
            sink: &sink,
        };
        let texts = vec!["museum".to_string()];
        let vecs = emb.embed_batch(&texts).unwrap();

        let replay = Replay::from_records(sink.records());
        assert_eq!(replay.complete(&req).unwrap(), "one");
        assert_eq!(replay.complete(&req).unwrap(), "two");
        assert!(matches!(replay.complete(&req), Err(ProviderError::ReplayMiss(_))));
        assert_eq!(replay.embed_batch(&texts).unwrap(), vecs);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        {
            let sink = TranscriptSink::to_file(&path).unwrap();
            let rec = Recording {
                inner: crate::providers::mock::FixedPreference(4.5),
                sink: &sink,
            };
            rec.raw_score("q", "plan").unwrap();
        }
        let replay = Replay::load(&path).unwrap();
        assert_eq!(replay.raw_score("q", "plan").unwrap(), 4.5);
        let line = std::fs::read_to_string(&path).unwrap();
        let rec: TranscriptRecord = serde_json::from_str(line.trim()).unwrap();
        assert_eq!(rec.request_hash.len(), 64);
    }
}
