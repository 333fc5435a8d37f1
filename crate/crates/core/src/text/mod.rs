//! Text normalization and segmentation with character-offset provenance.
//!
//! All offsets count Unicode scalar values (`char`s) of the normalized text,
//! never bytes. A [`Span`] `[start, end)` sliced out of [`Document::text`]
//! with [`Span::slice`] reproduces the annotated surface exactly.

mod abbrev;
mod normalize;
mod split;
mod tokenize;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub use abbrev::{Abbreviations, DEFAULT_ABBREVIATIONS};
pub use normalize::normalize_text;
pub use split::split_sentences;
pub use tokenize::tokenize;

/// Half-open character range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    /// Slices `text` by character offsets. Returns `None` when the span
    /// exceeds the text.
    pub fn slice<'a>(&self, text: &'a str) -> Option<&'a str> {
        if self.start > self.end {
            return None;
        }
        let mut indices = text.char_indices().map(|(i, _)| i).chain(core::iter::once(text.len()));
        let begin = indices.nth(self.start)?;
        let finish = if self.end == self.start {
            begin
        } else {
            indices.nth(self.end - self.start - 1)?
        };
        Some(&text[begin..finish])
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub span: Span,
    pub surface: String,
    /// Position within the owning sentence.
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub span: Span,
    pub tokens: Vec<Token>,
    /// Position within the owning document.
    pub index: usize,
}

impl Sentence {
    /// Builds a sentence from bare token surfaces joined by single spaces,
    /// starting at offset 0. Used for corpora that carry no original text.
    pub fn from_surfaces<S: AsRef<str>>(surfaces: &[S], index: usize) -> Self {
        let mut offset = 0;
        let mut tokens = Vec::with_capacity(surfaces.len());
        for (i, s) in surfaces.iter().enumerate() {
            let s = s.as_ref();
            if i > 0 {
                offset += 1;
            }
            let len = s.chars().count();
            tokens.push(Token {
                span: Span::new(offset, offset + len),
                surface: String::from(s),
                index: i,
            });
            offset += len;
        }
        Sentence {
            span: Span::new(0, offset),
            tokens,
            index,
        }
    }

    /// Text obtained by joining the token surfaces with single spaces.
    pub fn joined(&self) -> String {
        let mut out = String::new();
        for (i, t) in self.tokens.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&t.surface);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Where a document's text came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    Manual,
    File(String),
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Manual => f.write_str("manual"),
            Source::File(name) => write!(f, "file:{name}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    /// Normalized text; every span in the document indexes into it.
    pub text: String,
    pub language: String,
    pub source: Source,
    pub sentences: Vec<Sentence>,
}

/// Normalizes `raw`, splits it into sentences and tokenizes each sentence.
pub fn segment(raw: &str, id: impl Into<String>, source: Source, abbreviations: &Abbreviations) -> Document {
    let text = normalize_text(raw);
    let chars: Vec<char> = text.chars().collect();
    let sentences = split::split_chars(&chars, abbreviations)
        .into_iter()
        .enumerate()
        .map(|(index, span)| {
            let surface: String = chars[span.start..span.end].iter().collect();
            Sentence {
                span,
                tokens: tokenize(&surface, span.start, abbreviations),
                index,
            }
        })
        .collect();
    Document {
        id: id.into(),
        text,
        language: String::from("es"),
        source,
        sentences,
    }
}
