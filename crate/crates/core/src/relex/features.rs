use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::MentionPair;
use crate::text::Sentence;

/// Placeholder for a context token that falls outside the sentence.
pub const NO_TOKEN: &str = "⊥";

/// Binary features of a mention pair, identified by their strings.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FeatureSet(BTreeSet<String>);

impl FeatureSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, feature: String) {
        self.0.insert(feature);
    }

    pub fn contains(&self, feature: &str) -> bool {
        self.0.contains(feature)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<S: Into<String>> FromIterator<S> for FeatureSet {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        FeatureSet(iter.into_iter().map(Into::into).collect())
    }
}

/// Vocabulary-indexed binary features: strictly increasing column indices,
/// each with implicit value 1.0.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SparseFeatures {
    indices: Vec<usize>,
}

impl SparseFeatures {
    /// Sorts and deduplicates `indices`.
    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        SparseFeatures { indices }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }
}

fn distance_bucket(gap: usize) -> &'static str {
    match gap {
        0 => "0",
        1 => "1",
        2 => "2",
        3..=5 => "3-5",
        6..=10 => "6-10",
        _ => ">10",
    }
}

/// Feature templates for a pair:
///
/// | template | value |
/// |----------|-------|
/// | `tp`   | `TYPE1~TYPE2` |
/// | `h1`, `h2` | last lowercased token of each argument |
/// | `hh`   | `h1~h2` |
/// | `bw`   | each distinct lowercased token between the arguments |
/// | `db`   | token-gap bucket: 0, 1, 2, 3-5, 6-10, >10 |
/// | `mb`   | other mentions strictly between, capped at 3 |
/// | `wb1`  | token before arg1, or `⊥` |
/// | `wa2`  | token after arg2, or `⊥` |
/// | `tpdb` | `tp~db` |
///
/// `mentions` are the sentence's mentions, consulted for `mb`.
pub fn extract_features(pair: &MentionPair, sentence: &Sentence, mentions: &[crate::ner::EntityMention]) -> FeatureSet {
    let tokens = &sentence.tokens;
    let (a, b) = (&pair.arg1, &pair.arg2);
    let types = format!("{}~{}", a.entity_type, b.entity_type);
    let head1 = tokens[a.last()].surface.to_lowercase();
    let head2 = tokens[b.last()].surface.to_lowercase();
    let gap = pair.gap();
    let bucket = distance_bucket(gap);
    let between_mentions = mentions
        .iter()
        .filter(|m| m.first() > a.last() && m.last() < b.first())
        .count()
        .min(3);
    let before = if a.first() == 0 {
        NO_TOKEN
    } else {
        tokens[a.first() - 1].surface.as_str()
    };
    let after = tokens.get(b.last() + 1).map_or(NO_TOKEN, |t| t.surface.as_str());

    let mut set = FeatureSet::new();
    set.insert(format!("tp={types}"));
    set.insert(format!("h1={head1}"));
    set.insert(format!("h2={head2}"));
    set.insert(format!("hh={head1}~{head2}"));
    for t in &tokens[a.last() + 1..b.first()] {
        set.insert(format!("bw={}", t.surface.to_lowercase()));
    }
    set.insert(format!("db={bucket}"));
    set.insert(format!("mb={between_mentions}"));
    set.insert(format!("wb1={before}"));
    set.insert(format!("wa2={after}"));
    set.insert(format!("tpdb={types}~{bucket}"));
    set
}
