use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{BioTag, EntityMention, EntityType};
use crate::text::{Sentence, Span};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BioError {
    #[error("mentions overlap at token {token}")]
    OverlappingMentions { token: usize },
    #[error("mention token range [{first}, {last}] is invalid for a sentence of {len} tokens")]
    MentionOutOfRange { first: usize, last: usize, len: usize },
    #[error("expected {expected} tags, found {found}")]
    LengthMismatch { expected: usize, found: usize },
}

/// Builds a mention covering tokens `first..=last` of `sentence`.
pub fn mention_from_tokens(
    sentence: &Sentence,
    first: usize,
    last: usize,
    entity_type: EntityType,
    extractor_id: &str,
    confidence: f64,
) -> EntityMention {
    EntityMention {
        span: Span::new(sentence.tokens[first].span.start, sentence.tokens[last].span.end),
        token_range: (first, last),
        entity_type,
        sentence_index: sentence.index,
        extractor_id: String::from(extractor_id),
        confidence,
    }
}

/// Encodes mentions as one tag per token: `B-X` on a mention's first token,
/// `I-X` on the rest, `O` elsewhere.
pub fn encode_bio(sentence: &Sentence, mentions: &[EntityMention]) -> Result<Vec<BioTag>, BioError> {
    let len = sentence.tokens.len();
    let mut tags = vec![BioTag::O; len];
    let mut taken = vec![false; len];
    for m in mentions {
        let (first, last) = m.token_range;
        if first > last || last >= len {
            return Err(BioError::MentionOutOfRange { first, last, len });
        }
        for token in first..=last {
            if taken[token] {
                return Err(BioError::OverlappingMentions { token });
            }
            taken[token] = true;
            tags[token] = if token == first {
                BioTag::B(m.entity_type)
            } else {
                BioTag::I(m.entity_type)
            };
        }
    }
    Ok(tags)
}

/// Maximal `B-X I-X*` runs as inclusive `(first, last, type)` triples.
/// An `I-X` with no compatible predecessor opens a new run, as if it were
/// `B-X`. Total over any input.
pub fn tag_runs(tags: &[BioTag]) -> Vec<(usize, usize, EntityType)> {
    let mut runs = Vec::new();
    let mut open: Option<(usize, EntityType)> = None;
    for (i, tag) in tags.iter().enumerate() {
        match *tag {
            BioTag::O => {
                if let Some((start, ty)) = open.take() {
                    runs.push((start, i - 1, ty));
                }
            }
            BioTag::B(ty) => {
                if let Some((start, prev)) = open.take() {
                    runs.push((start, i - 1, prev));
                }
                open = Some((i, ty));
            }
            BioTag::I(ty) => match open {
                Some((_, prev)) if prev == ty => {}
                _ => {
                    if let Some((start, prev)) = open.take() {
                        runs.push((start, i - 1, prev));
                    }
                    open = Some((i, ty));
                }
            },
        }
    }
    if let Some((start, ty)) = open {
        runs.push((start, tags.len() - 1, ty));
    }
    runs
}

/// Decodes a tag sequence into mentions, repairing orphan `I-X` tags.
pub fn decode_bio(
    tags: &[BioTag],
    sentence: &Sentence,
    extractor_id: &str,
    confidence: f64,
) -> Result<Vec<EntityMention>, BioError> {
    if tags.len() != sentence.tokens.len() {
        return Err(BioError::LengthMismatch {
            expected: sentence.tokens.len(),
            found: tags.len(),
        });
    }
    Ok(tag_runs(tags)
        .into_iter()
        .map(|(first, last, ty)| mention_from_tokens(sentence, first, last, ty, extractor_id, confidence))
        .collect())
}

/// Position of the first ill-formed tag: an `I-X` at position 0 or after a
/// tag that is neither `B-X` nor `I-X`.
pub fn first_ill_formed(tags: &[BioTag]) -> Option<usize> {
    let mut prev = BioTag::O;
    for (i, tag) in tags.iter().enumerate() {
        if let BioTag::I(ty) = *tag {
            if prev.entity_type() != Some(ty) {
                return Some(i);
            }
        }
        prev = *tag;
    }
    None
}
