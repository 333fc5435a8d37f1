use alloc::vec::Vec;

use crate::ner::EntityMention;
use crate::text::Sentence;

/// Default cap on the number of tokens between two paired mentions.
pub const DEFAULT_MAX_TOKEN_DISTANCE: usize = 50;

/// An ordered pair of mentions from one sentence; `arg1` comes first.
#[derive(Debug, Clone, PartialEq)]
pub struct MentionPair {
    pub sentence_index: usize,
    pub arg1: EntityMention,
    pub arg2: EntityMention,
}

impl MentionPair {
    /// Number of tokens strictly between the two mentions.
    pub fn gap(&self) -> usize {
        self.arg2.first() - self.arg1.last() - 1
    }
}

/// All mention pairs whose token gap does not exceed `max_token_distance`,
/// ordered by `(arg1 start, arg2 start)`.
pub fn generate_pairs(sentence: &Sentence, mentions: &[EntityMention], max_token_distance: usize) -> Vec<MentionPair> {
    let mut sorted: Vec<&EntityMention> = mentions.iter().collect();
    sorted.sort_by_key(|m| m.token_range);
    let mut pairs = Vec::new();
    for (i, a) in sorted.iter().enumerate() {
        for b in &sorted[i + 1..] {
            if b.first() <= a.last() {
                continue;
            }
            if b.first() - a.last() - 1 > max_token_distance {
                continue;
            }
            pairs.push(MentionPair {
                sentence_index: sentence.index,
                arg1: (*a).clone(),
                arg2: (*b).clone(),
            });
        }
    }
    pairs
}
