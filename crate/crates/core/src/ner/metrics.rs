use alloc::collections::BTreeSet;

use super::{EntityMention, EntityType};
use crate::metrics::PrfCounts;

/// Entity-level scores: a mention counts only on exact span and type match.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EntityMetrics {
    /// Indexed by [`EntityType::index`].
    pub per_type: [PrfCounts; 7],
    pub micro: PrfCounts,
}

impl EntityMetrics {
    pub fn for_type(&self, ty: EntityType) -> &PrfCounts {
        &self.per_type[ty.index()]
    }
}

type Key = (usize, usize, usize, EntityType);

fn key(m: &EntityMention) -> Key {
    (m.sentence_index, m.first(), m.last(), m.entity_type)
}

/// Scores predicted mentions against gold mentions. Each item pairs the gold
/// and predicted mentions of one sentence.
pub fn evaluate_mentions<'a, I>(pairs: I) -> EntityMetrics
where
    I: IntoIterator<Item = (&'a [EntityMention], &'a [EntityMention])>,
{
    let mut metrics = EntityMetrics::default();
    for (gold, predicted) in pairs {
        let gold: BTreeSet<Key> = gold.iter().map(key).collect();
        let predicted: BTreeSet<Key> = predicted.iter().map(key).collect();
        for k in &predicted {
            let c = &mut metrics.per_type[k.3.index()];
            if gold.contains(k) {
                c.tp += 1;
            } else {
                c.fp += 1;
            }
        }
        for k in gold.difference(&predicted) {
            metrics.per_type[k.3.index()].fn_ += 1;
        }
    }
    let mut micro = PrfCounts::default();
    metrics.per_type.iter().for_each(|c| micro.add(c));
    metrics.micro = micro;
    metrics
}
