use alloc::vec::Vec;

use super::label::LABEL_COUNT;
use super::{classify_pair, FeatureSet, RelationLabel, RelexModel};
use crate::metrics::PrfCounts;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("evaluation corpus is empty")]
pub struct EmptyCorpus;

#[derive(Debug, Clone, PartialEq)]
pub struct RelexMetrics {
    /// Indexed by [`RelationLabel::index`], `NON-REL` included.
    pub per_label: [PrfCounts; LABEL_COUNT],
    /// Pooled over the five substantive labels; `NON-REL` is excluded.
    pub micro: PrfCounts,
    /// Set when micro precision or recall is 0/0, which happens when neither
    /// gold nor predictions contain a substantive label. Micro scores are
    /// then reported as 0.
    pub micro_undefined: bool,
    /// Unweighted mean of the five substantive per-label F1 scores.
    pub macro_f1: f64,
    /// `confusion[gold][predicted]`.
    pub confusion: [[usize; LABEL_COUNT]; LABEL_COUNT],
}

impl RelexMetrics {
    pub fn for_label(&self, label: RelationLabel) -> &PrfCounts {
        &self.per_label[label.index()]
    }

    pub fn total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }

    /// Fraction of instances on the confusion-matrix diagonal.
    pub fn accuracy(&self) -> f64 {
        let correct: usize = (0..LABEL_COUNT).map(|i| self.confusion[i][i]).sum();
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            correct as f64 / total as f64
        }
    }
}

/// Metrics from `(gold, predicted)` label pairs.
pub fn metrics_from_predictions(
    pairs: impl IntoIterator<Item = (RelationLabel, RelationLabel)>,
) -> Result<RelexMetrics, EmptyCorpus> {
    let mut confusion = [[0usize; LABEL_COUNT]; LABEL_COUNT];
    let mut seen = false;
    for (gold, predicted) in pairs {
        confusion[gold.index()][predicted.index()] += 1;
        seen = true;
    }
    if !seen {
        return Err(EmptyCorpus);
    }
    let mut per_label = [PrfCounts::default(); LABEL_COUNT];
    for (k, counts) in per_label.iter_mut().enumerate() {
        counts.tp = confusion[k][k];
        counts.fp = (0..LABEL_COUNT).filter(|&g| g != k).map(|g| confusion[g][k]).sum();
        counts.fn_ = (0..LABEL_COUNT).filter(|&p| p != k).map(|p| confusion[k][p]).sum();
    }
    let mut micro = PrfCounts::default();
    for label in RelationLabel::SUBSTANTIVE {
        micro.add(&per_label[label.index()]);
    }
    let micro_undefined = micro.tp + micro.fp == 0 || micro.tp + micro.fn_ == 0;
    let macro_f1 = RelationLabel::SUBSTANTIVE
        .iter()
        .map(|l| per_label[l.index()].f1())
        .sum::<f64>()
        / RelationLabel::SUBSTANTIVE.len() as f64;
    Ok(RelexMetrics {
        per_label,
        micro,
        micro_undefined,
        macro_f1,
        confusion,
    })
}

/// Classifies every instance and scores the predictions against gold.
pub fn evaluate_relex(model: &RelexModel, corpus: &[(FeatureSet, RelationLabel)]) -> Result<RelexMetrics, EmptyCorpus> {
    let predictions: Vec<(RelationLabel, RelationLabel)> = corpus
        .iter()
        .map(|(features, gold)| (*gold, classify_pair(model, features).label))
        .collect();
    metrics_from_predictions(predictions)
}
