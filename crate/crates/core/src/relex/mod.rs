//! Relation extraction: mention pairing, pair features, the one-vs-rest
//! hinge-loss classifier and its evaluation.

mod features;
mod label;
mod metrics;
mod pairs;
mod svm;

use alloc::vec::Vec;

pub use features::{extract_features, FeatureSet, SparseFeatures, NO_TOKEN};
pub use label::{select_label, RelationLabel, UnknownLabel, LABEL_COUNT};
pub use metrics::{evaluate_relex, metrics_from_predictions, EmptyCorpus, RelexMetrics};
pub use pairs::{generate_pairs, MentionPair, DEFAULT_MAX_TOKEN_DISTANCE};
pub use svm::{
    classify_pair, instance_objective, instance_subgradient, train_relex, Classification, RelexHyperparameters,
    RelexMetadata, RelexModel, RelexModelError, RelexTrainError, TrainReport, RELEX_FORMAT_VERSION,
};

use crate::ner::EntityMention;
use crate::text::Sentence;

/// A classified mention pair. `label` is always the tie-broken argmax of
/// `scores`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationInstance {
    pub pair: MentionPair,
    pub label: RelationLabel,
    /// One score per label, canonical order.
    pub scores: [f64; LABEL_COUNT],
}

/// Pairs, featurizes and classifies the mentions of one sentence. Pairs
/// labelled `NON-REL` are kept.
pub fn extract_relations(
    sentence: &Sentence,
    mentions: &[EntityMention],
    model: &RelexModel,
    max_token_distance: usize,
) -> Vec<RelationInstance> {
    generate_pairs(sentence, mentions, max_token_distance)
        .into_iter()
        .map(|pair| {
            let features = extract_features(&pair, sentence, mentions);
            let Classification { label, scores } = classify_pair(model, &features);
            RelationInstance { pair, label, scores }
        })
        .collect()
}
