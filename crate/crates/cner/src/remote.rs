//! Client side of the remote extractor protocol.
//!
//! Request: `POST <endpoint>` with `{"tokens": [...], "language": "es"}`.
//! Response: `{"mentions": [{"type": "PER", "first": 0, "last": 0, "confidence": 0.9}]}`.
//! Mentions with an unknown type, an invalid token range or an overlap with
//! an earlier mention are dropped, each with a warning.

use std::time::Duration;

use cner_core::ner::{mention_from_tokens, EntityMention, EntityType};
use cner_core::text::Sentence;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RemoteError {
    #[error("remote extractor unavailable: {0}")]
    Unavailable(String),
    #[error("remote extractor protocol error: {0}")]
    Protocol(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemoteRequest {
    pub tokens: Vec<String>,
    pub language: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemoteMentions {
    pub mentions: Vec<EntityMention>,
    pub warnings: Vec<String>,
}

pub struct RemoteClient {
    endpoint: String,
    agent: ureq::Agent,
}

impl RemoteClient {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        RemoteClient {
            endpoint: endpoint.into(),
            agent,
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    /// Sends one sentence and validates the reply.
    pub fn extract(&self, sentence: &Sentence, extractor_id: &str) -> Result<RemoteMentions, RemoteError> {
        let request = RemoteRequest {
            tokens: sentence.tokens.iter().map(|t| t.surface.clone()).collect(),
            language: "es".into(),
        };
        let mut response = self
            .agent
            .post(&self.endpoint)
            .send_json(&request)
            .map_err(|e| RemoteError::Unavailable(e.to_string()))?;
        let status = response.status();
        if status != 200 {
            return Err(RemoteError::Protocol(format!("status {}", status.as_u16())));
        }
        let body = response.body_mut().read_to_string().map_err(|e| match e {
            ureq::Error::Timeout(_) | ureq::Error::Io(_) => RemoteError::Unavailable(e.to_string()),
            other => RemoteError::Protocol(other.to_string()),
        })?;
        validate_response(&body, sentence, extractor_id)
    }
}

/// Parses and validates a response body against `sentence`.
pub fn validate_response(body: &str, sentence: &Sentence, extractor_id: &str) -> Result<RemoteMentions, RemoteError> {
    let value: Value = serde_json::from_str(body).map_err(|e| RemoteError::Protocol(format!("malformed body: {e}")))?;
    let items = value
        .get("mentions")
        .and_then(Value::as_array)
        .ok_or_else(|| RemoteError::Protocol("body lacks a `mentions` array".into()))?;

    let n = sentence.tokens.len();
    let mut accepted: Vec<EntityMention> = Vec::new();
    let mut warnings = Vec::new();
    for (i, item) in items.iter().enumerate() {
        let mut drop = |why: String| warnings.push(format!("{extractor_id}: dropped mention {i}: {why}"));
        let Some(code) = item.get("type").and_then(Value::as_str) else {
            drop("missing type".into());
            continue;
        };
        let Some(ty) = EntityType::from_code(code) else {
            drop(format!("unknown entity type `{code}`"));
            continue;
        };
        let first = item.get("first").and_then(Value::as_u64);
        let last = item.get("last").and_then(Value::as_u64);
        let (Some(first), Some(last)) = (first, last) else {
            drop("missing or negative token index".into());
            continue;
        };
        let (first, last) = (first as usize, last as usize);
        if first > last || last >= n {
            drop(format!(
                "token range [{first}, {last}] outside a sentence of {n} tokens"
            ));
            continue;
        }
        if accepted.iter().any(|m| first <= m.last() && m.first() <= last) {
            drop(format!("token range [{first}, {last}] overlaps an earlier mention"));
            continue;
        }
        let confidence = match item.get("confidence") {
            None => 1.0,
            Some(v) => match v.as_f64() {
                Some(c) if c.is_finite() => c.clamp(0.0, 1.0),
                _ => {
                    drop("confidence is not a number".into());
                    continue;
                }
            },
        };
        accepted.push(mention_from_tokens(sentence, first, last, ty, extractor_id, confidence));
    }
    accepted.sort_by_key(|m| m.token_range);
    Ok(RemoteMentions {
        mentions: accepted,
        warnings,
    })
}
