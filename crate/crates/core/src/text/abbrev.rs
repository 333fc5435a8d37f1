use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};

/// Abbreviations shipped by default. Each keeps its trailing period.
pub const DEFAULT_ABBREVIATIONS: &[&str] = &[
    "Sr.", "Sra.", "Srta.", "Sres.", "Dr.", "Dra.", "Drs.", "Prof.", "Profa.", "Lic.", "Ing.", "Arq.", "Mons.",
    "Gral.", "Cnel.", "Tte.", "Cap.", "Excmo.", "Excma.", "Ilmo.", "Sto.", "Sta.", "Ud.", "Uds.", "Vd.", "Vds.", "D.",
    "Dña.", "etc.", "EE.UU.", "pág.", "págs.", "núm.", "núms.", "art.", "arts.", "cap.", "vol.", "ed.", "ej.", "p.ej.",
    "aprox.", "tel.", "Av.", "Avda.", "Cía.", "S.A.", "dpto.", "Dpto.", "admón.", "a.C.", "d.C.",
];

/// A protected-abbreviation list consulted by the sentence splitter and the
/// tokenizer. Matching is exact and case-sensitive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Abbreviations {
    entries: BTreeSet<String>,
}

impl Abbreviations {
    pub fn empty() -> Self {
        Abbreviations {
            entries: BTreeSet::new(),
        }
    }

    pub fn insert(&mut self, abbreviation: &str) {
        self.entries.insert(abbreviation.to_string());
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains(word)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(String::as_str)
    }
}

impl Default for Abbreviations {
    fn default() -> Self {
        DEFAULT_ABBREVIATIONS.iter().copied().collect()
    }
}

impl<'a> FromIterator<&'a str> for Abbreviations {
    fn from_iter<I: IntoIterator<Item = &'a str>>(iter: I) -> Self {
        Abbreviations {
            entries: iter.into_iter().map(ToString::to_string).collect(),
        }
    }
}
