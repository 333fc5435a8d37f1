//! One-vs-rest linear max-margin classifier trained by stochastic
//! subgradient descent on the L2-regularized hinge loss.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::label::{select_label, LABEL_COUNT};
use super::{FeatureSet, RelationLabel, SparseFeatures};
use crate::fingerprint::Fingerprinter;

pub const RELEX_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelexHyperparameters {
    /// Regularization strength.
    pub lambda: f64,
    pub epochs: u32,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelexMetadata {
    pub fingerprint: String,
    pub created_at: u64,
    pub format_version: u32,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RelexTrainError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(&'static str),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RelexModelError {
    #[error("duplicate feature `{0}`")]
    DuplicateFeature(String),
    #[error("feature index {index} out of range for a vocabulary of {size}")]
    FeatureIndexOutOfRange { index: usize, size: usize },
    #[error("label index {0} out of range")]
    LabelIndexOutOfRange(usize),
    #[error("non-finite parameter")]
    NonFinite,
}

/// Learned relation classifier: vocabulary, one weight row and one bias per
/// label. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct RelexModel {
    vocabulary: BTreeMap<String, usize>,
    features: Vec<String>,
    /// `weights[label][column]`.
    weights: Vec<Vec<f64>>,
    bias: [f64; LABEL_COUNT],
    hyperparameters: RelexHyperparameters,
    metadata: RelexMetadata,
}

/// Per-label scores and the tie-broken argmax label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub label: RelationLabel,
    pub scores: [f64; LABEL_COUNT],
}

impl RelexModel {
    pub fn from_parts(
        features: Vec<String>,
        triples: impl IntoIterator<Item = (usize, usize, f64)>,
        bias: [f64; LABEL_COUNT],
        hyperparameters: RelexHyperparameters,
        metadata: RelexMetadata,
    ) -> Result<Self, RelexModelError> {
        let mut vocabulary = BTreeMap::new();
        for (i, f) in features.iter().enumerate() {
            if vocabulary.insert(f.clone(), i).is_some() {
                return Err(RelexModelError::DuplicateFeature(f.clone()));
            }
        }
        if bias.iter().any(|b| !b.is_finite()) {
            return Err(RelexModelError::NonFinite);
        }
        let mut weights = vec![vec![0.0; features.len()]; LABEL_COUNT];
        for (label, feature, w) in triples {
            if label >= LABEL_COUNT {
                return Err(RelexModelError::LabelIndexOutOfRange(label));
            }
            if feature >= features.len() {
                return Err(RelexModelError::FeatureIndexOutOfRange {
                    index: feature,
                    size: features.len(),
                });
            }
            if !w.is_finite() {
                return Err(RelexModelError::NonFinite);
            }
            weights[label][feature] = w;
        }
        Ok(RelexModel {
            vocabulary,
            features,
            weights,
            bias,
            hyperparameters,
            metadata,
        })
    }

    pub fn features(&self) -> &[String] {
        &self.features
    }

    pub fn bias(&self) -> &[f64; LABEL_COUNT] {
        &self.bias
    }

    pub fn hyperparameters(&self) -> &RelexHyperparameters {
        &self.hyperparameters
    }

    pub fn metadata(&self) -> &RelexMetadata {
        &self.metadata
    }

    /// Nonzero weights as `(label_index, feature_index, weight)`, ordered by
    /// label then feature.
    pub fn weight_triples(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for (label, row) in self.weights.iter().enumerate() {
            for (col, &w) in row.iter().enumerate() {
                if w != 0.0 {
                    out.push((label, col, w));
                }
            }
        }
        out
    }

    /// Maps feature strings to columns, skipping strings outside the
    /// vocabulary.
    pub fn vectorize(&self, features: &FeatureSet) -> SparseFeatures {
        SparseFeatures::new(
            features
                .iter()
                .filter_map(|f| self.vocabulary.get(f).copied())
                .collect(),
        )
    }

    pub fn scores(&self, x: &SparseFeatures) -> [f64; LABEL_COUNT] {
        let mut scores = self.bias;
        for (score, row) in scores.iter_mut().zip(&self.weights) {
            *score += x.indices().iter().map(|&i| row[i]).sum::<f64>();
        }
        scores
    }
}

/// Scores a pair's features under every label and picks the label.
pub fn classify_pair(model: &RelexModel, features: &FeatureSet) -> Classification {
    let scores = model.scores(&model.vectorize(features));
    Classification {
        label: select_label(&scores),
        scores,
    }
}

/// Per-instance regularized hinge objective over dense vectors:
/// `(lambda/2)·‖w‖² + max(0, 1 − y·(w·x + b))`.
pub fn instance_objective(w: &[f64], b: f64, x: &[f64], y: f64, lambda: f64) -> f64 {
    let norm: f64 = w.iter().map(|v| v * v).sum();
    let dot: f64 = w.iter().zip(x).map(|(a, c)| a * c).sum();
    0.5 * lambda * norm + (1.0 - y * (dot + b)).max(0.0)
}

/// Subgradient of [`instance_objective`] with respect to `(w, b)`.
pub fn instance_subgradient(w: &[f64], b: f64, x: &[f64], y: f64, lambda: f64) -> (Vec<f64>, f64) {
    let dot: f64 = w.iter().zip(x).map(|(a, c)| a * c).sum();
    let active = y * (dot + b) < 1.0;
    let grad_w = w
        .iter()
        .zip(x)
        .map(|(wi, xi)| lambda * wi - if active { y * xi } else { 0.0 })
        .collect();
    (grad_w, if active { -y } else { 0.0 })
}

/// Binary scorer stored as `scale · direction` so that the per-step
/// shrinkage costs O(1).
struct ScaledClassifier {
    direction: Vec<f64>,
    scale: f64,
    bias: f64,
}

impl ScaledClassifier {
    fn new(dim: usize) -> Self {
        ScaledClassifier {
            direction: vec![0.0; dim],
            scale: 1.0,
            bias: 0.0,
        }
    }

    fn margin(&self, x: &SparseFeatures) -> f64 {
        self.scale * x.indices().iter().map(|&i| self.direction[i]).sum::<f64>() + self.bias
    }

    /// One stochastic subgradient step with learning rate `1/(lambda·t)`.
    fn step(&mut self, x: &SparseFeatures, y: f64, lambda: f64, t: u64) {
        let eta = 1.0 / (lambda * t as f64);
        let violated = y * self.margin(x) < 1.0;
        let shrink = 1.0 - eta * lambda;
        if shrink <= 0.0 {
            self.direction.iter_mut().for_each(|v| *v = 0.0);
            self.scale = 1.0;
        } else {
            self.scale *= shrink;
        }
        if violated {
            let delta = eta * y / self.scale;
            for &i in x.indices() {
                self.direction[i] += delta;
            }
            self.bias += eta * y;
        }
        if self.scale < 1e-9 {
            self.direction.iter_mut().for_each(|v| *v *= self.scale);
            self.scale = 1.0;
        }
    }

    fn weights(&self) -> Vec<f64> {
        self.direction.iter().map(|v| v * self.scale).collect()
    }

    fn norm_squared(&self) -> f64 {
        self.scale * self.scale * self.direction.iter().map(|v| v * v).sum::<f64>()
    }
}

/// Training trace: the regularized empirical hinge objective, summed over the
/// six binary classifiers, evaluated after each epoch.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    pub epoch_objectives: Vec<f64>,
}

fn objective(classifiers: &[ScaledClassifier], data: &[(SparseFeatures, RelationLabel)], lambda: f64) -> f64 {
    let n = data.len() as f64;
    classifiers
        .iter()
        .zip(RelationLabel::ALL)
        .map(|(c, label)| {
            let loss: f64 = data
                .iter()
                .map(|(x, gold)| {
                    let y = if *gold == label { 1.0 } else { -1.0 };
                    (1.0 - y * c.margin(x)).max(0.0)
                })
                .sum();
            0.5 * lambda * c.norm_squared() + loss / n
        })
        .sum()
}

fn training_fingerprint(instances: &[(FeatureSet, RelationLabel)]) -> String {
    let mut fp = Fingerprinter::new();
    for (features, label) in instances {
        fp.field("<instance>").field(label.code());
        for f in features.iter() {
            fp.field(f);
        }
    }
    fp.finish()
}

/// Trains six one-vs-rest classifiers. The vocabulary is the sorted union of
/// all feature strings. Each epoch visits the instances in an order shuffled
/// by a ChaCha8 generator seeded with `seed`.
pub fn train_relex(
    instances: &[(FeatureSet, RelationLabel)],
    hyperparameters: RelexHyperparameters,
    created_at: u64,
) -> Result<(RelexModel, TrainReport), RelexTrainError> {
    if instances.is_empty() {
        return Err(RelexTrainError::EmptyTrainingSet);
    }
    let RelexHyperparameters { lambda, epochs, seed } = hyperparameters;
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(RelexTrainError::InvalidHyperparameter("lambda must be a positive real"));
    }
    if epochs == 0 {
        return Err(RelexTrainError::InvalidHyperparameter("epochs must be positive"));
    }

    let features: Vec<String> = instances
        .iter()
        .flat_map(|(f, _)| f.iter())
        .collect::<BTreeSet<&str>>()
        .into_iter()
        .map(ToString::to_string)
        .collect();
    let vocabulary: BTreeMap<&str, usize> = features.iter().enumerate().map(|(i, f)| (f.as_str(), i)).collect();
    let data: Vec<(SparseFeatures, RelationLabel)> = instances
        .iter()
        .map(|(f, label)| (SparseFeatures::new(f.iter().map(|s| vocabulary[s]).collect()), *label))
        .collect();

    let mut classifiers: Vec<ScaledClassifier> = (0..LABEL_COUNT)
        .map(|_| ScaledClassifier::new(features.len()))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut report = TrainReport::default();
    let mut t: u64 = 0;
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let (x, gold) = &data[i];
            for (c, label) in classifiers.iter_mut().zip(RelationLabel::ALL) {
                let y = if *gold == label { 1.0 } else { -1.0 };
                c.step(x, y, lambda, t);
            }
        }
        report.epoch_objectives.push(objective(&classifiers, &data, lambda));
    }

    let mut triples = Vec::new();
    let mut bias = [0.0; LABEL_COUNT];
    for (label, c) in classifiers.iter().enumerate() {
        bias[label] = c.bias;
        for (col, w) in c.weights().into_iter().enumerate() {
            if w != 0.0 {
                triples.push((label, col, w));
            }
        }
    }
    let metadata = RelexMetadata {
        fingerprint: training_fingerprint(instances),
        created_at,
        format_version: RELEX_FORMAT_VERSION,
    };
    let model = RelexModel::from_parts(features, triples, bias, hyperparameters, metadata)
        .map_err(|_| RelexTrainError::InvalidHyperparameter("training diverged to non-finite weights"))?;
    Ok((model, report))
}
