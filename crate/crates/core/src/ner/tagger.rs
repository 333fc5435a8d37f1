//! Averaged-perceptron token tagger with greedy left-to-right decoding.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{first_ill_formed, mention_from_tokens, tag_runs, BioTag, EntityMention, TAG_COUNT};
use crate::fingerprint::Fingerprinter;
use crate::text::Sentence;

pub const TAGGER_FORMAT_VERSION: u32 = 1;

const PAD_BEFORE: &str = "<s>";
const PAD_AFTER: &str = "</s>";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggerMetadata {
    pub seed: u64,
    pub epochs: u32,
    pub fingerprint: String,
    /// Seconds since the Unix epoch, supplied by the caller.
    pub created_at: u64,
    pub format_version: u32,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrainError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("sentence {sentence}: gold tags are ill-formed at position {position}")]
    IllFormedGold { sentence: usize, position: usize },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TaggerModelError {
    #[error("duplicate feature `{0}`")]
    DuplicateFeature(String),
    #[error("feature index {index} out of range for a vocabulary of {size}")]
    FeatureIndexOutOfRange { index: usize, size: usize },
    #[error("tag index {0} out of range")]
    TagIndexOutOfRange(usize),
    #[error("weight for tag {tag}, feature {feature} is not finite")]
    NonFiniteWeight { tag: usize, feature: usize },
}

/// Learned tagger parameters: a feature vocabulary and one weight per
/// (tag, feature) pair. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggerModel {
    vocabulary: BTreeMap<String, usize>,
    features: Vec<String>,
    /// Indexed by feature column; inner array by tag index.
    weights: Vec<[f64; TAG_COUNT]>,
    metadata: TaggerMetadata,
}

impl TaggerModel {
    /// Assembles a model from a vocabulary (column order) and sparse
    /// `(tag_index, feature_index, weight)` triples.
    pub fn from_parts(
        features: Vec<String>,
        triples: impl IntoIterator<Item = (usize, usize, f64)>,
        metadata: TaggerMetadata,
    ) -> Result<Self, TaggerModelError> {
        let mut vocabulary = BTreeMap::new();
        for (i, f) in features.iter().enumerate() {
            if vocabulary.insert(f.clone(), i).is_some() {
                return Err(TaggerModelError::DuplicateFeature(f.clone()));
            }
        }
        let mut weights = vec![[0.0; TAG_COUNT]; features.len()];
        for (tag, feature, w) in triples {
            if tag >= TAG_COUNT {
                return Err(TaggerModelError::TagIndexOutOfRange(tag));
            }
            if feature >= features.len() {
                return Err(TaggerModelError::FeatureIndexOutOfRange {
                    index: feature,
                    size: features.len(),
                });
            }
            if !w.is_finite() {
                return Err(TaggerModelError::NonFiniteWeight { tag, feature });
            }
            weights[feature][tag] = w;
        }
        Ok(TaggerModel {
            vocabulary,
            features,
            weights,
            metadata,
        })
    }

    pub fn metadata(&self) -> &TaggerMetadata {
        &self.metadata
    }

    /// Feature strings in column order.
    pub fn features(&self) -> &[String] {
        &self.features
    }

    pub fn tag_set(&self) -> [BioTag; TAG_COUNT] {
        BioTag::all()
    }

    pub fn weight(&self, tag: BioTag, feature: &str) -> f64 {
        self.vocabulary
            .get(feature)
            .map_or(0.0, |&col| self.weights[col][tag.index()])
    }

    /// Nonzero weights as `(tag_index, feature_index, weight)`, ordered by
    /// tag then feature.
    pub fn weight_triples(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for tag in 0..TAG_COUNT {
            for (col, row) in self.weights.iter().enumerate() {
                if row[tag] != 0.0 {
                    out.push((tag, col, row[tag]));
                }
            }
        }
        out
    }

    fn scores(&self, features: &[String]) -> [f64; TAG_COUNT] {
        let mut scores = [0.0; TAG_COUNT];
        for f in features {
            if let Some(&col) = self.vocabulary.get(f) {
                for (s, w) in scores.iter_mut().zip(self.weights[col].iter()) {
                    *s += w;
                }
            }
        }
        scores
    }
}

fn word_shape(word: &str) -> String {
    let mut shape = String::new();
    let mut last = None;
    for c in word.chars() {
        let class = if c.is_uppercase() {
            'X'
        } else if c.is_alphabetic() {
            'x'
        } else if c.is_numeric() {
            'd'
        } else {
            'o'
        };
        if last != Some(class) {
            shape.push(class);
            last = Some(class);
        }
    }
    shape
}

fn lowercase_words(sentence: &Sentence) -> Vec<String> {
    sentence.tokens.iter().map(|t| t.surface.to_lowercase()).collect()
}

/// Features of token `i` that do not depend on previous predictions.
fn static_features(words: &[String], lower: &[String], i: usize) -> Vec<String> {
    let word = &words[i];
    let low = &lower[i];
    let chars: Vec<char> = low.chars().collect();
    let mut feats = vec![format!("w={low}"), format!("shape={}", word_shape(word))];
    for k in 1..=3 {
        if chars.len() >= k {
            let prefix: String = chars[..k].iter().collect();
            let suffix: String = chars[chars.len() - k..].iter().collect();
            feats.push(format!("p{k}={prefix}"));
            feats.push(format!("s{k}={suffix}"));
        }
    }
    if word.chars().next().is_some_and(char::is_uppercase) {
        feats.push("cap".to_string());
    }
    if i == 0 {
        feats.push("first".to_string());
    }
    let context = |offset: isize| -> &str {
        let j = i as isize + offset;
        if j < 0 {
            PAD_BEFORE
        } else if j as usize >= lower.len() {
            PAD_AFTER
        } else {
            &lower[j as usize]
        }
    };
    feats.push(format!("w-2={}", context(-2)));
    feats.push(format!("w-1={}", context(-1)));
    feats.push(format!("w+1={}", context(1)));
    feats.push(format!("w+2={}", context(2)));
    feats
}

fn history_features(lower_word: &str, prev: Option<BioTag>) -> [String; 2] {
    let prev = prev.map_or_else(|| PAD_BEFORE.to_string(), |t| t.to_string());
    [format!("t-1={prev}"), format!("t-1,w={prev}~{lower_word}")]
}

/// Every feature string for token `i` given the previous predicted tag.
pub fn token_features(sentence: &Sentence, i: usize, prev: Option<BioTag>) -> Vec<String> {
    let words: Vec<String> = sentence.tokens.iter().map(|t| t.surface.clone()).collect();
    let lower = lowercase_words(sentence);
    let mut feats = static_features(&words, &lower, i);
    feats.extend(history_features(&lower[i], prev));
    feats
}

/// Index of the best score, lowest index on ties, with the margin over the
/// runner-up.
fn best_with_margin(scores: &[f64; TAG_COUNT]) -> (usize, f64) {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    let runner_up = scores
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != best)
        .map(|(_, &s)| s)
        .fold(f64::NEG_INFINITY, f64::max);
    (best, scores[best] - runner_up)
}

fn greedy_decode(model: &TaggerModel, sentence: &Sentence) -> Vec<(BioTag, f64)> {
    let words: Vec<String> = sentence.tokens.iter().map(|t| t.surface.clone()).collect();
    let lower = lowercase_words(sentence);
    let mut out = Vec::with_capacity(words.len());
    let mut prev = None;
    for i in 0..words.len() {
        let mut feats = static_features(&words, &lower, i);
        feats.extend(history_features(&lower[i], prev));
        let (best, margin) = best_with_margin(&model.scores(&feats));
        let tag = BioTag::all()[best];
        out.push((tag, margin));
        prev = Some(tag);
    }
    out
}

/// Greedy tag sequence for `sentence`, before BIO repair.
pub fn tag_sequence(model: &TaggerModel, sentence: &Sentence) -> Vec<BioTag> {
    greedy_decode(model, sentence).into_iter().map(|(t, _)| t).collect()
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

/// Tags a sentence and decodes mentions. A mention's confidence is the
/// logistic of the best-vs-second-best margins summed over its tokens.
pub fn tag_sentence(model: &TaggerModel, sentence: &Sentence, extractor_id: &str) -> Vec<EntityMention> {
    let decoded = greedy_decode(model, sentence);
    let tags: Vec<BioTag> = decoded.iter().map(|(t, _)| *t).collect();
    tag_runs(&tags)
        .into_iter()
        .map(|(first, last, ty)| {
            let margin: f64 = decoded[first..=last].iter().map(|(_, m)| m).sum();
            let confidence = logistic(margin).clamp(0.0, 1.0);
            mention_from_tokens(sentence, first, last, ty, extractor_id, confidence)
        })
        .collect()
}

/// Perceptron weights with lazily accumulated running sums for averaging.
struct AveragedWeights {
    current: Vec<[f64; TAG_COUNT]>,
    totals: Vec<[f64; TAG_COUNT]>,
    stamps: Vec<[u64; TAG_COUNT]>,
    step: u64,
}

impl AveragedWeights {
    fn grow(&mut self, columns: usize) {
        self.current.resize(columns, [0.0; TAG_COUNT]);
        self.totals.resize(columns, [0.0; TAG_COUNT]);
        self.stamps.resize(columns, [0; TAG_COUNT]);
    }

    fn scores(&self, cols: &[usize]) -> [f64; TAG_COUNT] {
        let mut scores = [0.0; TAG_COUNT];
        for &c in cols {
            for (s, w) in scores.iter_mut().zip(self.current[c].iter()) {
                *s += w;
            }
        }
        scores
    }

    fn update(&mut self, col: usize, tag: usize, delta: f64) {
        let elapsed = (self.step - self.stamps[col][tag]) as f64;
        self.totals[col][tag] += elapsed * self.current[col][tag];
        self.stamps[col][tag] = self.step;
        self.current[col][tag] += delta;
    }

    fn averaged(&self) -> Vec<[f64; TAG_COUNT]> {
        if self.step == 0 {
            return vec![[0.0; TAG_COUNT]; self.current.len()];
        }
        let steps = self.step as f64;
        self.current
            .iter()
            .zip(self.totals.iter().zip(self.stamps.iter()))
            .map(|(w, (tot, st))| {
                let mut row = [0.0; TAG_COUNT];
                for t in 0..TAG_COUNT {
                    row[t] = (tot[t] + (self.step - st[t]) as f64 * w[t]) / steps;
                }
                row
            })
            .collect()
    }
}

struct Interner {
    index: BTreeMap<String, usize>,
    names: Vec<String>,
}

impl Interner {
    fn intern(&mut self, feature: String) -> usize {
        if let Some(&i) = self.index.get(&feature) {
            return i;
        }
        let i = self.names.len();
        self.index.insert(feature.clone(), i);
        self.names.push(feature);
        i
    }
}

fn corpus_fingerprint(corpus: &[(Sentence, Vec<BioTag>)]) -> String {
    let mut fp = Fingerprinter::new();
    for (sentence, tags) in corpus {
        fp.field("<sentence>");
        for (token, tag) in sentence.tokens.iter().zip(tags) {
            fp.field(&token.surface).field(&tag.to_string());
        }
    }
    fp.finish()
}

/// Trains the tagger. Sentence order is reshuffled every epoch by a ChaCha8
/// generator seeded with `seed`; the result is a pure function of
/// `(corpus, epochs, seed, created_at)`.
pub fn train_tagger(
    corpus: &[(Sentence, Vec<BioTag>)],
    epochs: u32,
    seed: u64,
    created_at: u64,
) -> Result<TaggerModel, TrainError> {
    if corpus.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    for (i, (sentence, gold)) in corpus.iter().enumerate() {
        if gold.len() != sentence.tokens.len() {
            return Err(TrainError::IllFormedGold {
                sentence: i,
                position: gold.len().min(sentence.tokens.len()),
            });
        }
        if let Some(position) = first_ill_formed(gold) {
            return Err(TrainError::IllFormedGold { sentence: i, position });
        }
    }

    let mut interner = Interner {
        index: BTreeMap::new(),
        names: Vec::new(),
    };
    let prepared: Vec<(Vec<String>, Vec<Vec<usize>>)> = corpus
        .iter()
        .map(|(sentence, _)| {
            let words: Vec<String> = sentence.tokens.iter().map(|t| t.surface.clone()).collect();
            let lower = lowercase_words(sentence);
            let cols = (0..words.len())
                .map(|i| {
                    static_features(&words, &lower, i)
                        .into_iter()
                        .map(|f| interner.intern(f))
                        .collect()
                })
                .collect();
            (lower, cols)
        })
        .collect();

    let mut weights = AveragedWeights {
        current: Vec::new(),
        totals: Vec::new(),
        stamps: Vec::new(),
        step: 0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    let tags = BioTag::all();

    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &si in &order {
            let gold = &corpus[si].1;
            let (lower, statics) = &prepared[si];
            let mut prev = None;
            for (i, static_cols) in statics.iter().enumerate() {
                let mut cols = static_cols.clone();
                for f in history_features(&lower[i], prev) {
                    cols.push(interner.intern(f));
                }
                weights.grow(interner.names.len());
                let (best, _) = best_with_margin(&weights.scores(&cols));
                let truth = gold[i].index();
                if best != truth {
                    for &c in &cols {
                        weights.update(c, truth, 1.0);
                        weights.update(c, best, -1.0);
                    }
                }
                weights.step += 1;
                prev = Some(tags[best]);
            }
        }
    }

    weights.grow(interner.names.len());
    let averaged = weights.averaged();
    let mut features = Vec::new();
    let mut triples = Vec::new();
    for (name, row) in interner.names.into_iter().zip(averaged) {
        if row.iter().all(|&w| w == 0.0) {
            continue;
        }
        let col = features.len();
        features.push(name);
        for (tag, &w) in row.iter().enumerate() {
            if w != 0.0 {
                triples.push((tag, col, w));
            }
        }
    }

    let metadata = TaggerMetadata {
        seed,
        epochs,
        fingerprint: corpus_fingerprint(corpus),
        created_at,
        format_version: TAGGER_FORMAT_VERSION,
    };
    Ok(TaggerModel::from_parts(features, triples, metadata).expect("trained weights are well formed"))
}
