use alloc::collections::btree_map::{BTreeMap, Entry};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{mention_from_tokens, EntityMention, EntityType};
use crate::text::Sentence;

/// Sentence-initial words that the capitalization heuristic never treats as
/// the start of a name.
pub const FUNCTION_WORDS: &[&str] = &[
    "el", "la", "los", "las", "lo", "un", "una", "unos", "unas", "al", "del", "de", "en", "a", "y", "e", "o", "u",
    "que", "por", "para", "con", "sin", "sobre", "según", "desde", "hasta", "entre", "se", "su", "sus", "mi", "mis",
    "tu", "tus", "este", "esta", "estos", "estas", "ese", "esa", "esos", "esas", "aquel", "aquella", "no", "sí", "si",
    "pero", "como", "cuando", "donde", "hoy", "ayer", "mañana", "ya", "muy", "también", "tras", "ante",
];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GazetteerError {
    #[error("gazetteer entries must contain at least one token")]
    EmptyEntry,
    #[error("duplicate gazetteer entry `{0}`")]
    Duplicate(String),
}

/// Token-sequence lookup table mapping known names to entity types.
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    name: String,
    entries: BTreeMap<Vec<String>, EntityType>,
    /// Same entries keyed with a lowercased first token, for matches that
    /// start at sentence position 0.
    folded: BTreeMap<Vec<String>, EntityType>,
    max_len: usize,
}

fn fold_first(tokens: &[String]) -> Vec<String> {
    let mut key = tokens.to_vec();
    if let Some(first) = key.first_mut() {
        *first = first.to_lowercase();
    }
    key
}

impl Gazetteer {
    pub fn new(name: impl Into<String>) -> Self {
        Gazetteer {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn from_entries<I, S>(name: impl Into<String>, entries: I) -> Result<Self, GazetteerError>
    where
        I: IntoIterator<Item = (Vec<S>, EntityType)>,
        S: Into<String>,
    {
        let mut g = Gazetteer::new(name);
        for (tokens, ty) in entries {
            g.insert(tokens.into_iter().map(Into::into).collect(), ty)?;
        }
        Ok(g)
    }

    pub fn insert(&mut self, tokens: Vec<String>, entity_type: EntityType) -> Result<(), GazetteerError> {
        if tokens.is_empty() || tokens.iter().any(String::is_empty) {
            return Err(GazetteerError::EmptyEntry);
        }
        let folded = fold_first(&tokens);
        let len = tokens.len();
        match self.entries.entry(tokens) {
            Entry::Occupied(e) => return Err(GazetteerError::Duplicate(e.key().join(" "))),
            Entry::Vacant(e) => {
                e.insert(entity_type);
            }
        }
        self.folded.entry(folded).or_insert(entity_type);
        self.max_len = self.max_len.max(len);
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&[String], EntityType)> {
        self.entries.iter().map(|(k, v)| (k.as_slice(), *v))
    }

    fn lookup(&self, words: &[String], at_start: bool) -> Option<EntityType> {
        if at_start {
            self.folded.get(&fold_first(words)).copied()
        } else {
            self.entries.get(words).copied()
        }
    }
}

fn is_capitalized(word: &str) -> bool {
    word.chars().next().is_some_and(char::is_uppercase)
}

/// Left-to-right longest-match scan. Matches get confidence 1.0 and the scan
/// resumes after each match. With `heuristic_caps`, maximal runs of
/// capitalized uncovered tokens become `PER` mentions with confidence 0.5.
pub fn gazetteer_extract(
    sentence: &Sentence,
    gazetteer: &Gazetteer,
    heuristic_caps: bool,
    extractor_id: &str,
) -> Vec<EntityMention> {
    let words: Vec<String> = sentence.tokens.iter().map(|t| t.surface.clone()).collect();
    let n = words.len();
    let mut found: Vec<(usize, usize, EntityType, f64)> = Vec::new();
    let mut covered = vec![false; n];

    let mut i = 0;
    while i < n {
        let longest = gazetteer.max_len.min(n - i);
        let hit = (1..=longest)
            .rev()
            .find_map(|len| gazetteer.lookup(&words[i..i + len], i == 0).map(|ty| (len, ty)));
        match hit {
            Some((len, ty)) => {
                found.push((i, i + len - 1, ty, 1.0));
                covered[i..i + len].iter_mut().for_each(|c| *c = true);
                i += len;
            }
            None => i += 1,
        }
    }

    if heuristic_caps {
        let candidate = |k: usize| {
            !covered[k]
                && is_capitalized(&words[k])
                && !(k == 0 && FUNCTION_WORDS.contains(&words[k].to_lowercase().as_str()))
        };
        let mut k = 0;
        while k < n {
            if candidate(k) {
                let start = k;
                while k + 1 < n && candidate(k + 1) {
                    k += 1;
                }
                found.push((start, k, EntityType::Per, 0.5));
            }
            k += 1;
        }
        found.sort_by_key(|m| m.0);
    }

    found
        .into_iter()
        .map(|(first, last, ty, conf)| mention_from_tokens(sentence, first, last, ty, extractor_id, conf))
        .collect()
}
