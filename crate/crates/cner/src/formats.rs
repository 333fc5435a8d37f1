//! Line-oriented text formats: abbreviation lists, gazetteers and the two
//! versioned model files.
//!
//! Model files are written deterministically: identical models serialize to
//! identical bytes. Weights use Rust's shortest round-trip decimal form, so
//! a write/read cycle restores every weight bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use cner_core::ner::{BioTag, EntityType, Gazetteer, TaggerMetadata, TaggerModel, TAG_COUNT};
use cner_core::relex::{RelationLabel, RelexHyperparameters, RelexMetadata, RelexModel, LABEL_COUNT};
use cner_core::text::Abbreviations;

pub const TAGGER_HEADER: &str = "NERTAG v1";
pub const RELEX_HEADER: &str = "RELEX v1";

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("file is not valid UTF-8")]
    Encoding,
}

impl FormatError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        FormatError::Syntax {
            line,
            message: message.into(),
        }
    }
}

pub fn read_text(path: &Path) -> Result<String, FormatError> {
    let bytes = fs::read(path).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })?;
    String::from_utf8(bytes).map_err(|_| FormatError::Encoding)
}

pub fn write_text(path: &Path, contents: &str) -> Result<(), FormatError> {
    fs::write(path, contents).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Non-blank, non-comment lines with their 1-based numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

/// One abbreviation per line, each ending in `.`; `#` starts a comment line.
pub fn parse_abbreviations(text: &str) -> Result<Abbreviations, FormatError> {
    let mut out = Abbreviations::empty();
    for (line, raw) in content_lines(text) {
        let entry = raw.trim();
        if entry.chars().any(char::is_whitespace) {
            return Err(FormatError::at(
                line,
                format!("abbreviation `{entry}` contains whitespace"),
            ));
        }
        if !entry.ends_with('.') {
            return Err(FormatError::at(
                line,
                format!("abbreviation `{entry}` must end with '.'"),
            ));
        }
        out.insert(entry);
    }
    Ok(out)
}

pub fn load_abbreviations(path: &Path) -> Result<Abbreviations, FormatError> {
    parse_abbreviations(&read_text(path)?)
}

/// `TYPE<TAB>token token ...` per line; `#` starts a comment line.
pub fn parse_gazetteer(name: &str, text: &str) -> Result<Gazetteer, FormatError> {
    let mut gazetteer = Gazetteer::new(name);
    for (line, raw) in content_lines(text) {
        let (code, tokens) = raw
            .split_once('\t')
            .ok_or_else(|| FormatError::at(line, "expected `TYPE<TAB>tokens`"))?;
        let ty: EntityType = code.trim().parse().map_err(|e| FormatError::at(line, format!("{e}")))?;
        let tokens: Vec<String> = tokens.split_whitespace().map(str::to_string).collect();
        gazetteer
            .insert(tokens, ty)
            .map_err(|e| FormatError::at(line, e.to_string()))?;
    }
    Ok(gazetteer)
}

pub fn load_gazetteer(path: &Path) -> Result<Gazetteer, FormatError> {
    let name = path
        .file_stem()
        .map_or_else(|| "gazetteer".into(), |s| s.to_string_lossy().into_owned());
    parse_gazetteer(&name, &read_text(path)?)
}

fn tag_list() -> String {
    BioTag::all()
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

fn label_list() -> String {
    RelationLabel::ALL
        .iter()
        .map(|l| l.code())
        .collect::<Vec<_>>()
        .join(" ")
}

fn write_vocabulary(out: &mut String, features: &[String]) {
    let _ = writeln!(out, "[vocabulary] {}", features.len());
    for (i, f) in features.iter().enumerate() {
        let _ = writeln!(out, "{i}\t{f}");
    }
}

fn write_triples(out: &mut String, triples: &[(usize, usize, f64)]) {
    let _ = writeln!(out, "[weights] {}", triples.len());
    for (row, col, w) in triples {
        let _ = writeln!(out, "{row}\t{col}\t{w}");
    }
}

pub fn write_tagger_model(model: &TaggerModel) -> String {
    let md = model.metadata();
    let mut out = String::new();
    let _ = writeln!(out, "{TAGGER_HEADER}");
    let _ = writeln!(out, "format_version={}", md.format_version);
    let _ = writeln!(out, "seed={}", md.seed);
    let _ = writeln!(out, "epochs={}", md.epochs);
    let _ = writeln!(out, "fingerprint={}", md.fingerprint);
    let _ = writeln!(out, "created_at={}", md.created_at);
    let _ = writeln!(out, "tags={}", tag_list());
    write_vocabulary(&mut out, model.features());
    write_triples(&mut out, &model.weight_triples());
    out
}

pub fn write_relex_model(model: &RelexModel) -> String {
    let md = model.metadata();
    let hp = model.hyperparameters();
    let mut out = String::new();
    let _ = writeln!(out, "{RELEX_HEADER}");
    let _ = writeln!(out, "format_version={}", md.format_version);
    let _ = writeln!(out, "lambda={}", hp.lambda);
    let _ = writeln!(out, "epochs={}", hp.epochs);
    let _ = writeln!(out, "seed={}", hp.seed);
    let _ = writeln!(out, "fingerprint={}", md.fingerprint);
    let _ = writeln!(out, "created_at={}", md.created_at);
    let _ = writeln!(out, "labels={}", label_list());
    write_vocabulary(&mut out, model.features());
    write_triples(&mut out, &model.weight_triples());
    let _ = writeln!(out, "[bias] {LABEL_COUNT}");
    for (i, b) in model.bias().iter().enumerate() {
        let _ = writeln!(out, "{i}\t{b}");
    }
    out
}

/// Cursor over the lines of a model file.
struct Lines<'a> {
    lines: Vec<&'a str>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            lines: text.lines().collect(),
            pos: 0,
        }
    }

    fn line_no(&self) -> usize {
        self.pos + 1
    }

    fn next(&mut self) -> Result<&'a str, FormatError> {
        let line = self
            .lines
            .get(self.pos)
            .copied()
            .ok_or_else(|| FormatError::at(self.line_no(), "unexpected end of file"))?;
        self.pos += 1;
        Ok(line)
    }

    fn peek(&self) -> Option<&'a str> {
        self.lines.get(self.pos).copied()
    }

    fn expect(&mut self, want: &str) -> Result<(), FormatError> {
        let line = self.line_no();
        let got = self.next()?;
        if got != want {
            return Err(FormatError::at(line, format!("expected `{want}`, found `{got}`")));
        }
        Ok(())
    }

    /// `key=value` lines up to the first section header.
    fn metadata(&mut self) -> Result<Vec<(usize, &'a str, &'a str)>, FormatError> {
        let mut out = Vec::new();
        while let Some(l) = self.peek() {
            if l.starts_with('[') {
                break;
            }
            let line = self.line_no();
            let (k, v) = l
                .split_once('=')
                .ok_or_else(|| FormatError::at(line, "expected `key=value`"))?;
            out.push((line, k, v));
            self.pos += 1;
        }
        Ok(out)
    }

    fn section(&mut self, name: &str) -> Result<usize, FormatError> {
        let line = self.line_no();
        let l = self.next()?;
        let count = l
            .strip_prefix('[')
            .and_then(|r| r.strip_prefix(name))
            .and_then(|r| r.strip_prefix("] "))
            .ok_or_else(|| FormatError::at(line, format!("expected `[{name}] <count>`")))?;
        count
            .parse()
            .map_err(|_| FormatError::at(line, format!("invalid count `{count}`")))
    }

    fn vocabulary(&mut self) -> Result<Vec<String>, FormatError> {
        let count = self.section("vocabulary")?;
        let mut features = Vec::with_capacity(count.min(1 << 20));
        for i in 0..count {
            let line = self.line_no();
            let l = self.next()?;
            let (idx, feature) = l
                .split_once('\t')
                .ok_or_else(|| FormatError::at(line, "expected `index<TAB>feature`"))?;
            if idx.parse::<usize>().ok() != Some(i) {
                return Err(FormatError::at(line, format!("expected feature index {i}")));
            }
            features.push(feature.to_string());
        }
        Ok(features)
    }

    fn triples(&mut self) -> Result<Vec<(usize, usize, f64)>, FormatError> {
        let count = self.section("weights")?;
        let mut out = Vec::with_capacity(count.min(1 << 20));
        for _ in 0..count {
            let line = self.line_no();
            let l = self.next()?;
            let parts: Vec<&str> = l.split('\t').collect();
            let parsed = match parts.as_slice() {
                [r, c, w] => r.parse().ok().zip(c.parse().ok()).zip(w.parse::<f64>().ok()),
                _ => None,
            };
            let ((row, col), w) =
                parsed.ok_or_else(|| FormatError::at(line, "expected `row<TAB>column<TAB>weight`"))?;
            out.push((row, col, w));
        }
        Ok(out)
    }

    fn finish(&mut self) -> Result<(), FormatError> {
        while let Some(l) = self.peek() {
            if !l.trim().is_empty() {
                return Err(FormatError::at(self.line_no(), "trailing content after last section"));
            }
            self.pos += 1;
        }
        Ok(())
    }
}

fn required<'a>(meta: &[(usize, &'a str, &'a str)], key: &str) -> Result<(usize, &'a str), FormatError> {
    meta.iter()
        .find(|(_, k, _)| *k == key)
        .map(|(l, _, v)| (*l, *v))
        .ok_or_else(|| FormatError::at(1, format!("missing metadata key `{key}`")))
}

fn parse_field<T: std::str::FromStr>(meta: &[(usize, &str, &str)], key: &str) -> Result<T, FormatError> {
    let (line, v) = required(meta, key)?;
    v.parse()
        .map_err(|_| FormatError::at(line, format!("invalid value `{v}` for `{key}`")))
}

fn check_keys(meta: &[(usize, &str, &str)], allowed: &[&str]) -> Result<(), FormatError> {
    for (line, k, _) in meta {
        if !allowed.contains(k) {
            return Err(FormatError::at(*line, format!("unknown metadata key `{k}`")));
        }
    }
    Ok(())
}

pub fn parse_tagger_model(text: &str) -> Result<TaggerModel, FormatError> {
    let mut lines = Lines::new(text);
    lines.expect(TAGGER_HEADER)?;
    let meta = lines.metadata()?;
    check_keys(
        &meta,
        &["format_version", "seed", "epochs", "fingerprint", "created_at", "tags"],
    )?;
    let (tag_line, tags) = required(&meta, "tags")?;
    if tags != tag_list() {
        return Err(FormatError::at(tag_line, "tag set does not match the 15 BIO tags"));
    }
    debug_assert_eq!(BioTag::all().len(), TAG_COUNT);
    let metadata = TaggerMetadata {
        seed: parse_field(&meta, "seed")?,
        epochs: parse_field(&meta, "epochs")?,
        fingerprint: required(&meta, "fingerprint")?.1.to_string(),
        created_at: parse_field(&meta, "created_at")?,
        format_version: parse_field(&meta, "format_version")?,
    };
    let features = lines.vocabulary()?;
    let triples = lines.triples()?;
    lines.finish()?;
    TaggerModel::from_parts(features, triples, metadata).map_err(|e| FormatError::at(lines.line_no(), e.to_string()))
}

pub fn parse_relex_model(text: &str) -> Result<RelexModel, FormatError> {
    let mut lines = Lines::new(text);
    lines.expect(RELEX_HEADER)?;
    let meta = lines.metadata()?;
    check_keys(
        &meta,
        &[
            "format_version",
            "lambda",
            "epochs",
            "seed",
            "fingerprint",
            "created_at",
            "labels",
        ],
    )?;
    let (label_line, labels) = required(&meta, "labels")?;
    if labels != label_list() {
        return Err(FormatError::at(
            label_line,
            "label set does not match the 6 relation labels",
        ));
    }
    let hyperparameters = RelexHyperparameters {
        lambda: parse_field(&meta, "lambda")?,
        epochs: parse_field(&meta, "epochs")?,
        seed: parse_field(&meta, "seed")?,
    };
    let metadata = RelexMetadata {
        fingerprint: required(&meta, "fingerprint")?.1.to_string(),
        created_at: parse_field(&meta, "created_at")?,
        format_version: parse_field(&meta, "format_version")?,
    };
    let features = lines.vocabulary()?;
    let triples = lines.triples()?;
    let count_line = lines.line_no();
    if lines.section("bias")? != LABEL_COUNT {
        return Err(FormatError::at(
            count_line,
            format!("expected {LABEL_COUNT} bias values"),
        ));
    }
    let mut bias = [0.0; LABEL_COUNT];
    for (i, slot) in bias.iter_mut().enumerate() {
        let line = lines.line_no();
        let l = lines.next()?;
        let value = l
            .split_once('\t')
            .filter(|(idx, _)| idx.parse::<usize>().ok() == Some(i))
            .and_then(|(_, v)| v.parse::<f64>().ok())
            .ok_or_else(|| FormatError::at(line, format!("expected `{i}<TAB>bias`")))?;
        *slot = value;
    }
    lines.finish()?;
    RelexModel::from_parts(features, triples, bias, hyperparameters, metadata)
        .map_err(|e| FormatError::at(lines.line_no(), e.to_string()))
}

pub fn load_tagger_model(path: &Path) -> Result<TaggerModel, FormatError> {
    parse_tagger_model(&read_text(path)?)
}

pub fn load_relex_model(path: &Path) -> Result<RelexModel, FormatError> {
    parse_relex_model(&read_text(path)?)
}
