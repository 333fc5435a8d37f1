//! JSON wire format shared by the HTTP service and `cner analyze`.

use cner_core::ner::EntityMention;
use cner_core::relex::LABEL_COUNT;
use cner_core::text::{Document, Sentence, Span, Token};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireSpan {
    pub start: usize,
    pub end: usize,
}

impl From<Span> for WireSpan {
    fn from(s: Span) -> Self {
        WireSpan {
            start: s.start,
            end: s.end,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireToken {
    pub index: usize,
    pub surface: String,
    pub span: WireSpan,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireSentence {
    pub index: usize,
    pub span: WireSpan,
    pub tokens: Vec<WireToken>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireDocument {
    pub id: String,
    pub text: String,
    pub language: String,
    pub source: String,
    pub sentences: Vec<WireSentence>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireMention {
    pub span: WireSpan,
    pub token_range: [usize; 2],
    pub entity_type: String,
    pub sentence_index: usize,
    pub extractor_id: String,
    pub confidence: f64,
}

/// `arg1` and `arg2` index into [`AnalysisResult::mentions`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WirePair {
    pub sentence_index: usize,
    pub arg1: usize,
    pub arg2: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireRelation {
    pub pair: WirePair,
    pub label: String,
    pub scores: [f64; LABEL_COUNT],
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Timing {
    pub segment_ms: u64,
    pub ner_ms: u64,
    pub relex_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisResult {
    pub document: WireDocument,
    pub mentions: Vec<WireMention>,
    pub relations: Vec<WireRelation>,
    pub extractor_id: String,
    pub timing: Timing,
    pub warnings: Vec<String>,
}

impl AnalysisResult {
    /// Copy with all timing fields zeroed, for determinism checks.
    pub fn without_timing(&self) -> Self {
        AnalysisResult {
            timing: Timing::default(),
            ..self.clone()
        }
    }
}

fn token(t: &Token) -> WireToken {
    WireToken {
        index: t.index,
        surface: t.surface.clone(),
        span: t.span.into(),
    }
}

fn sentence(s: &Sentence) -> WireSentence {
    WireSentence {
        index: s.index,
        span: s.span.into(),
        tokens: s.tokens.iter().map(token).collect(),
    }
}

pub fn document(d: &Document) -> WireDocument {
    WireDocument {
        id: d.id.clone(),
        text: d.text.clone(),
        language: d.language.clone(),
        source: d.source.to_string(),
        sentences: d.sentences.iter().map(sentence).collect(),
    }
}

pub fn mention(m: &EntityMention) -> WireMention {
    WireMention {
        span: m.span.into(),
        token_range: [m.token_range.0, m.token_range.1],
        entity_type: m.entity_type.code().to_string(),
        sentence_index: m.sentence_index,
        extractor_id: m.extractor_id.clone(),
        confidence: m.confidence,
    }
}

/// Serialized body of a successful analysis, newline-terminated. Both the
/// service and the CLI emit exactly these bytes.
pub fn to_json(result: &AnalysisResult) -> String {
    let mut body = serde_json::to_string(result).expect("analysis results always serialize");
    body.push('\n');
    body
}

/// Machine-readable error codes and their HTTP statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorCode {
    MalformedRequest,
    CorruptFile,
    UnknownExtractor,
    ExtractorNotReady,
    PayloadTooLarge,
    UnsupportedFormat,
    RemoteUnavailable,
}

impl ErrorCode {
    pub const ALL: [ErrorCode; 7] = [
        ErrorCode::MalformedRequest,
        ErrorCode::CorruptFile,
        ErrorCode::UnknownExtractor,
        ErrorCode::ExtractorNotReady,
        ErrorCode::PayloadTooLarge,
        ErrorCode::UnsupportedFormat,
        ErrorCode::RemoteUnavailable,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::MalformedRequest => "MalformedRequest",
            ErrorCode::CorruptFile => "CorruptFile",
            ErrorCode::UnknownExtractor => "UnknownExtractor",
            ErrorCode::ExtractorNotReady => "ExtractorNotReady",
            ErrorCode::PayloadTooLarge => "PayloadTooLarge",
            ErrorCode::UnsupportedFormat => "UnsupportedFormat",
            ErrorCode::RemoteUnavailable => "RemoteUnavailable",
        }
    }

    pub fn status(self) -> u16 {
        match self {
            ErrorCode::MalformedRequest | ErrorCode::CorruptFile => 400,
            ErrorCode::UnknownExtractor => 404,
            ErrorCode::ExtractorNotReady => 409,
            ErrorCode::PayloadTooLarge => 413,
            ErrorCode::UnsupportedFormat => 415,
            ErrorCode::RemoteUnavailable => 502,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("{code:?}: {message}")]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        ApiError {
            code,
            message: message.into(),
        }
    }

    /// `{"error": {"code": ..., "message": ...}}`
    pub fn body(&self) -> String {
        serde_json::json!({"error": {"code": self.code.as_str(), "message": self.message}}).to_string()
    }
}

/// JSON request body for `POST /analyze`, and the `options` part of a
/// multipart upload (where `text` must be absent).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    pub extractor_id: String,
    #[serde(default)]
    pub include_non_rel: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_token_distance: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub version: String,
    pub extractors_ready: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Tagger,
    Relex,
}

/// Metadata of a loaded model. Weights are never exposed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub kind: ModelKind,
    pub file: String,
    pub format_version: u32,
    pub fingerprint: String,
    pub created_at: u64,
}
