//! Training/evaluation corpora.
//!
//! NER corpora are two tab-separated columns, `token<TAB>tag`, with a blank
//! line between sentences and `#` comment lines. RE corpora hold one JSON
//! object per line:
//!
//! ```json
//! {"text": "Juan vive en Cali.", "mentions": [{"start": 0, "end": 4, "type": "PER"}],
//!  "relations": [{"arg1": 0, "arg2": 1, "label": "GPE-AFF"}]}
//! ```
//!
//! Mention offsets count characters of the normalized text and must fall on
//! token boundaries of one sentence. Mention pairs with no listed relation
//! are `NON-REL` training negatives.

use std::collections::BTreeMap;
use std::path::Path;

use cner_core::ner::{first_ill_formed, mention_from_tokens, BioTag, EntityMention, EntityType};
use cner_core::relex::{extract_features, generate_pairs, FeatureSet, RelationLabel};
use cner_core::text::{segment, Abbreviations, Document, Sentence, Source};
use serde::{Deserialize, Serialize};

/// Extractor id attached to gold mentions.
pub const GOLD: &str = "gold";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: parse error: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: validation error: {message}")]
    Validation { line: usize, message: String },
}

impl CorpusError {
    pub fn line(&self) -> Option<usize> {
        match self {
            CorpusError::Io { .. } => None,
            CorpusError::Parse { line, .. } | CorpusError::Validation { line, .. } => Some(*line),
        }
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> CorpusError {
    CorpusError::Parse {
        line,
        message: message.into(),
    }
}

fn validation_err(line: usize, message: impl Into<String>) -> CorpusError {
    CorpusError::Validation {
        line,
        message: message.into(),
    }
}

fn decode(bytes: &[u8]) -> Result<&str, CorpusError> {
    std::str::from_utf8(bytes).map_err(|e| {
        let line = bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1;
        parse_err(line, "invalid UTF-8")
    })
}

fn read(path: &Path) -> Result<Vec<u8>, CorpusError> {
    std::fs::read(path).map_err(|e| CorpusError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NerSentence {
    pub tokens: Vec<String>,
    pub tags: Vec<BioTag>,
    /// Line of the sentence's first token.
    pub line: usize,
}

impl NerSentence {
    pub fn sentence(&self, index: usize) -> Sentence {
        Sentence::from_surfaces(&self.tokens, index)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NerCorpus {
    pub sentences: Vec<NerSentence>,
}

impl NerCorpus {
    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Sentences paired with gold tags, ready for training.
    pub fn training_pairs(&self) -> Vec<(Sentence, Vec<BioTag>)> {
        self.sentences
            .iter()
            .enumerate()
            .map(|(i, s)| (s.sentence(i), s.tags.clone()))
            .collect()
    }
}

pub fn parse_ner_corpus(bytes: &[u8]) -> Result<NerCorpus, CorpusError> {
    let text = decode(bytes)?;
    let mut corpus = NerCorpus::default();
    let mut current: Option<NerSentence> = None;
    let mut tag_lines: Vec<usize> = Vec::new();

    let mut close = |current: &mut Option<NerSentence>, tag_lines: &mut Vec<usize>| -> Result<(), CorpusError> {
        if let Some(s) = current.take() {
            if let Some(pos) = first_ill_formed(&s.tags) {
                return Err(validation_err(
                    tag_lines[pos],
                    format!("tag `{}` does not continue an entity of the same type", s.tags[pos]),
                ));
            }
            corpus.sentences.push(s);
        }
        tag_lines.clear();
        Ok(())
    };

    for (i, raw) in text.split('\n').enumerate() {
        let line = i + 1;
        let l = raw.strip_suffix('\r').unwrap_or(raw);
        if l.trim().is_empty() {
            close(&mut current, &mut tag_lines)?;
            continue;
        }
        if l.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = l.split('\t').collect();
        if cols.len() != 2 {
            return Err(parse_err(
                line,
                format!("expected 2 tab-separated columns (token, tag), found {}", cols.len()),
            ));
        }
        let token = cols[0];
        if token.is_empty() || token.chars().any(char::is_whitespace) {
            return Err(parse_err(line, format!("invalid token `{token}`")));
        }
        let tag: BioTag = cols[1].parse().map_err(|e| parse_err(line, format!("{e}")))?;
        let s = current.get_or_insert_with(|| NerSentence {
            tokens: Vec::new(),
            tags: Vec::new(),
            line,
        });
        s.tokens.push(token.to_string());
        s.tags.push(tag);
        tag_lines.push(line);
    }
    close(&mut current, &mut tag_lines)?;
    Ok(corpus)
}

pub fn load_ner_corpus(path: &Path) -> Result<NerCorpus, CorpusError> {
    parse_ner_corpus(&read(path)?)
}

pub fn write_ner_corpus(corpus: &NerCorpus) -> String {
    let mut out = String::new();
    for (i, s) in corpus.sentences.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        for (t, tag) in s.tokens.iter().zip(&s.tags) {
            out.push_str(&format!("{t}\t{tag}\n"));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawMention {
    pub start: usize,
    pub end: usize,
    #[serde(rename = "type")]
    pub entity_type: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawRelation {
    pub arg1: usize,
    pub arg2: usize,
    pub label: String,
}

/// One RE corpus line as written on disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawRecord {
    pub text: String,
    pub mentions: Vec<RawMention>,
    #[serde(default)]
    pub relations: Vec<RawRelation>,
}

/// A validated RE record, aligned to its segmentation.
#[derive(Debug, Clone, PartialEq)]
pub struct RelRecord {
    pub raw: RawRecord,
    pub line: usize,
    pub document: Document,
    /// Gold mentions in record order.
    pub mentions: Vec<EntityMention>,
    /// Gold labels keyed by record mention indices `(arg1, arg2)`.
    pub relations: BTreeMap<(usize, usize), RelationLabel>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RelCorpus {
    pub records: Vec<RelRecord>,
}

fn align(document: &Document, start: usize, end: usize) -> Result<(usize, usize, usize), String> {
    for sentence in &document.sentences {
        if start < sentence.span.start || start >= sentence.span.end {
            continue;
        }
        let first = sentence.tokens.iter().position(|t| t.span.start == start);
        let last = sentence.tokens.iter().position(|t| t.span.end == end);
        return match (first, last) {
            (Some(f), Some(l)) if f <= l => Ok((sentence.index, f, l)),
            (None, _) => Err(format!("start offset {start} is not a token boundary")),
            _ => Err(format!("end offset {end} is not a token boundary of the same sentence")),
        };
    }
    Err(format!("start offset {start} does not fall inside any sentence"))
}

fn validate_record(
    raw: RawRecord,
    line: usize,
    record_no: usize,
    abbreviations: &Abbreviations,
) -> Result<RelRecord, CorpusError> {
    let fail = |msg: String| validation_err(line, format!("record {record_no}: {msg}"));
    let document = segment(&raw.text, format!("record-{record_no}"), Source::Manual, abbreviations);
    let len = document.text.chars().count();

    let mut mentions = Vec::with_capacity(raw.mentions.len());
    for (i, m) in raw.mentions.iter().enumerate() {
        let ty: EntityType = m.entity_type.parse().map_err(|e| fail(format!("mention {i}: {e}")))?;
        if m.start >= m.end || m.end > len {
            return Err(fail(format!(
                "mention {i}: span [{}, {}) is invalid for a text of {len} characters",
                m.start, m.end
            )));
        }
        let (sentence_index, first, last) =
            align(&document, m.start, m.end).map_err(|e| fail(format!("mention {i}: {e}")))?;
        let sentence = &document.sentences[sentence_index];
        mentions.push(mention_from_tokens(sentence, first, last, ty, GOLD, 1.0));
    }
    let mut order: Vec<usize> = (0..mentions.len()).collect();
    order.sort_by_key(|&i| mentions[i].span.start);
    for w in order.windows(2) {
        if mentions[w[1]].span.start < mentions[w[0]].span.end {
            return Err(fail(format!("mentions {} and {} overlap", w[0], w[1])));
        }
    }

    let mut relations = BTreeMap::new();
    for (i, r) in raw.relations.iter().enumerate() {
        let label: RelationLabel = r.label.parse().map_err(|e| fail(format!("relation {i}: {e}")))?;
        if r.arg1 >= mentions.len() || r.arg2 >= mentions.len() {
            return Err(fail(format!(
                "relation {i}: argument index out of range ({} mentions)",
                mentions.len()
            )));
        }
        let (a, b) = (&mentions[r.arg1], &mentions[r.arg2]);
        if a.span.start >= b.span.start {
            return Err(fail(format!("relation {i}: arg1 must precede arg2")));
        }
        if a.sentence_index != b.sentence_index {
            return Err(fail(format!("relation {i}: arguments lie in different sentences")));
        }
        if relations.insert((r.arg1, r.arg2), label).is_some() {
            return Err(fail(format!("relation {i}: duplicate relation for this pair")));
        }
    }

    Ok(RelRecord {
        raw,
        line,
        document,
        mentions,
        relations,
    })
}

pub fn parse_re_corpus(bytes: &[u8], abbreviations: &Abbreviations) -> Result<RelCorpus, CorpusError> {
    let text = decode(bytes)?;
    let mut corpus = RelCorpus::default();
    for (i, l) in text.split('\n').enumerate() {
        let line = i + 1;
        if l.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(l).map_err(|e| parse_err(line, e.to_string()))?;
        let record_no = corpus.records.len() + 1;
        corpus
            .records
            .push(validate_record(raw, line, record_no, abbreviations)?);
    }
    Ok(corpus)
}

pub fn load_re_corpus(path: &Path, abbreviations: &Abbreviations) -> Result<RelCorpus, CorpusError> {
    parse_re_corpus(&read(path)?, abbreviations)
}

pub fn write_re_corpus(records: &[RawRecord]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).expect("records serialize") + "\n")
        .collect()
}

impl RelCorpus {
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Classifier instances from every generated pair. Listed relations give
    /// the gold label; all other pairs are `NON-REL`.
    pub fn instances(&self, max_token_distance: usize) -> Vec<(FeatureSet, RelationLabel)> {
        let mut out = Vec::new();
        for record in &self.records {
            for sentence in &record.document.sentences {
                let in_sentence: Vec<(usize, &EntityMention)> = record
                    .mentions
                    .iter()
                    .enumerate()
                    .filter(|(_, m)| m.sentence_index == sentence.index)
                    .collect();
                let by_start: BTreeMap<usize, usize> = in_sentence.iter().map(|(i, m)| (m.span.start, *i)).collect();
                let mentions: Vec<EntityMention> = in_sentence.iter().map(|(_, m)| (*m).clone()).collect();
                for pair in generate_pairs(sentence, &mentions, max_token_distance) {
                    let key = (by_start[&pair.arg1.span.start], by_start[&pair.arg2.span.start]);
                    let label = record.relations.get(&key).copied().unwrap_or(RelationLabel::NonRel);
                    out.push((extract_features(&pair, sentence, &mentions), label));
                }
            }
        }
        out
    }
}
