//! Deterministic in-process providers.

use std::collections::VecDeque;
use std::sync::Mutex;

use sha2::{Digest, Sha256};

use super::{ChatModel, ChatRequest, Embedder, EmbeddingVector, PreferenceModel, ProviderError, ProviderResult};

pub const MOCK_EMBED_DIM: usize = 32;

/// Weight of the whole-text component relative to the token features.
const WHOLE_TEXT_WEIGHT: f64 = 0.35;

fn digest(seed: u64, bytes: &[u8]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(bytes);
    h.finalize().into()
}

/// Signed feature hashing over lowercase word tokens plus a dense
/// component keyed on the exact lowercased text. Texts sharing words get a
/// positive cosine; texts differing in any byte get distinct vectors.
#[derive(Debug, Clone, Default)]
pub struct HashEmbedder {
    pub seed: u64,
}

impl HashEmbedder {
    pub fn new(seed: u64) -> Self {
        HashEmbedder { seed }
    }

    pub fn vector(&self, text: &str) -> EmbeddingVector {
        let lowered = text.to_lowercase();
        let mut v = vec![0.0; MOCK_EMBED_DIM];
        for token in lowered
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
        {
            let d = digest(self.seed, token.as_bytes());
            let idx = d[0] as usize % MOCK_EMBED_DIM;
            let sign = if d[1] & 1 == 0 { 1.0 } else { -1.0 };
            v[idx] += sign;
        }
        let whole = digest(self.seed ^ 0x5eed, lowered.as_bytes());
        for (i, x) in v.iter_mut().enumerate() {
            let b = whole[i % 32] as f64 / 255.0 - 0.5;
            *x += WHOLE_TEXT_WEIGHT * b;
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.0 {
            v.iter_mut().for_each(|x| *x /= n);
        }
        EmbeddingVector(v)
    }
}

impl Embedder for HashEmbedder {
    fn embed_batch(&self, texts: &[String]) -> ProviderResult<Vec<EmbeddingVector>> {
        Ok(texts.iter().map(|t| self.vector(t)).collect())
    }
}

/// Produces a reply as a pure function of the request and a seed.
pub trait Responder: Send + Sync {
    fn respond(&self, req: &ChatRequest, seed: u64) -> String;
}

impl<F: Fn(&ChatRequest, u64) -> String + Send + Sync> Responder for F {
    fn respond(&self, req: &ChatRequest, seed: u64) -> String {
        self(req, seed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CallRecord {
    pub request_hash: String,
    pub user_prompt_head: String,
}

fn record_of(req: &ChatRequest) -> CallRecord {
    CallRecord {
        request_hash: req.hash(),
        user_prompt_head: req.user_prompt.lines().next().unwrap_or("").to_string(),
    }
}

/// Chat model backed by a [`Responder`]; every call is appended to a log.
pub struct MockChat<R> {
    responder: R,
    seed: u64,
    log: Mutex<Vec<CallRecord>>,
}

impl<R: Responder> MockChat<R> {
    pub fn new(responder: R, seed: u64) -> Self {
        MockChat {
            responder,
            seed,
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn calls(&self) -> Vec<CallRecord> {
        self.log.lock().expect("call log poisoned").clone()
    }
}

impl<R: Responder> ChatModel for MockChat<R> {
    fn complete(&self, req: &ChatRequest) -> ProviderResult<String> {
        self.log.lock().expect("call log poisoned").push(record_of(req));
        Ok(self.responder.respond(req, self.seed))
    }
}

/// Returns queued replies in order; an exhausted queue is a transport error.
#[derive(Default)]
pub struct ScriptedChat {
    replies: Mutex<VecDeque<ProviderResult<String>>>,
    log: Mutex<Vec<CallRecord>>,
}

impl ScriptedChat {
    pub fn new<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ScriptedChat {
            replies: Mutex::new(replies.into_iter().map(|s| Ok(s.into())).collect()),
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn push_error(&self, e: ProviderError) {
        self.replies.lock().expect("script poisoned").push_back(Err(e));
    }

    pub fn calls(&self) -> Vec<CallRecord> {
        self.log.lock().expect("call log poisoned").clone()
    }

    pub fn remaining(&self) -> usize {
        self.replies.lock().expect("script poisoned").len()
    }
}

impl ChatModel for ScriptedChat {
    fn complete(&self, req: &ChatRequest) -> ProviderResult<String> {
        self.log.lock().expect("call log poisoned").push(record_of(req));
        self.replies
            .lock()
            .expect("script poisoned")
            .pop_front()
            .unwrap_or_else(|| Err(ProviderError::Transport("scripted replies exhausted".into())))
    }
}

/// Always returns the same raw score.
#[derive(Debug, Clone, Copy)]
pub struct FixedPreference(pub f64);

impl PreferenceModel for FixedPreference {
    fn raw_score(&self, _query: &str, _itinerary_text: &str) -> ProviderResult<f64> {
        Ok(self.0)
    }
}

/// Raw score in [-10, 10] derived from a hash of both texts.
#[derive(Debug, Clone, Copy, Default)]
pub struct HashPreference {
    pub seed: u64,
}

impl PreferenceModel for HashPreference {
    fn raw_score(&self, query: &str, itinerary_text: &str) -> ProviderResult<f64> {
        let d = digest(self.seed, format!("{query}\u{0}{itinerary_text}").as_bytes());
        let x = u16::from_le_bytes([d[0], d[1]]) as f64 / u16::MAX as f64;
        Ok(20.0 * x - 10.0)
    }
}
