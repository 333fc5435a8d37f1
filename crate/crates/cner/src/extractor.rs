//! Named-entity extractors and the registry the service exposes.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;
use std::time::Duration;

use cner_core::ner::{gazetteer_extract, tag_sentence, EntityMention, Gazetteer, TaggerModel};
use cner_core::text::Sentence;
use serde::{Deserialize, Serialize};

use crate::remote::{RemoteClient, RemoteError};

pub const RULE_ID: &str = "rule-gazetteer";
pub const LEARNED_ID: &str = "learned-tagger";
pub const REMOTE_ID: &str = "remote-adapter";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Extraction {
    pub mentions: Vec<EntityMention>,
    pub warnings: Vec<String>,
}

/// Produces entity mentions for one sentence. Implementations must return
/// mentions that lie inside the sentence and do not overlap.
pub trait Extractor: Send + Sync {
    fn extract(&self, sentence: &Sentence) -> Result<Extraction, RemoteError>;
}

pub struct RuleExtractor {
    pub id: String,
    pub gazetteer: Gazetteer,
    pub heuristic_caps: bool,
}

impl Extractor for RuleExtractor {
    fn extract(&self, sentence: &Sentence) -> Result<Extraction, RemoteError> {
        Ok(Extraction {
            mentions: gazetteer_extract(sentence, &self.gazetteer, self.heuristic_caps, &self.id),
            warnings: Vec::new(),
        })
    }
}

pub struct LearnedExtractor {
    pub id: String,
    pub model: Arc<TaggerModel>,
}

impl Extractor for LearnedExtractor {
    fn extract(&self, sentence: &Sentence) -> Result<Extraction, RemoteError> {
        Ok(Extraction {
            mentions: tag_sentence(&self.model, sentence, &self.id),
            warnings: Vec::new(),
        })
    }
}

pub struct RemoteExtractor {
    id: String,
    client: RemoteClient,
}

impl RemoteExtractor {
    pub fn new(id: impl Into<String>, endpoint: impl Into<String>, timeout: Duration) -> Self {
        RemoteExtractor {
            id: id.into(),
            client: RemoteClient::new(endpoint, timeout),
        }
    }
}

impl Extractor for RemoteExtractor {
    fn extract(&self, sentence: &Sentence) -> Result<Extraction, RemoteError> {
        let got = self.client.extract(sentence, &self.id)?;
        Ok(Extraction {
            mentions: got.mentions,
            warnings: got.warnings,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtractorKind {
    Rule,
    Learned,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractorDescriptor {
    pub id: String,
    pub display_name: String,
    pub kind: ExtractorKind,
    pub ready: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RegistryError {
    #[error("unknown extractor `{0}`")]
    UnknownExtractor(String),
    #[error("extractor `{id}` is not ready: {detail}")]
    NotReady { id: String, detail: String },
    #[error("extractor `{0}` is already registered")]
    Duplicate(String),
}

struct Entry {
    descriptor: ExtractorDescriptor,
    extractor: Option<Arc<dyn Extractor>>,
}

/// Extractors keyed by id. Listing order is by id.
#[derive(Default)]
pub struct Registry {
    entries: BTreeMap<String, Entry>,
}

impl fmt::Debug for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(self.entries.values().map(|e| &e.descriptor))
            .finish()
    }
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an extractor. `None` registers a descriptor that is not ready;
    /// the descriptor's `ready` flag is derived from the extractor's presence.
    pub fn register(
        &mut self,
        mut descriptor: ExtractorDescriptor,
        extractor: Option<Arc<dyn Extractor>>,
    ) -> Result<(), RegistryError> {
        if self.entries.contains_key(&descriptor.id) {
            return Err(RegistryError::Duplicate(descriptor.id));
        }
        descriptor.ready = extractor.is_some();
        self.entries
            .insert(descriptor.id.clone(), Entry { descriptor, extractor });
        Ok(())
    }

    pub fn list(&self) -> Vec<ExtractorDescriptor> {
        self.entries.values().map(|e| e.descriptor.clone()).collect()
    }

    pub fn ready_count(&self) -> usize {
        self.entries.values().filter(|e| e.descriptor.ready).count()
    }

    pub fn resolve(&self, id: &str) -> Result<Arc<dyn Extractor>, RegistryError> {
        let entry = self
            .entries
            .get(id)
            .ok_or_else(|| RegistryError::UnknownExtractor(id.to_string()))?;
        entry.extractor.clone().ok_or_else(|| RegistryError::NotReady {
            id: id.to_string(),
            detail: entry.descriptor.detail.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use cner_core::ner::EntityType;

    fn descriptor(id: &str, kind: ExtractorKind) -> ExtractorDescriptor {
        ExtractorDescriptor {
            id: id.into(),
            display_name: id.into(),
            kind,
            ready: false,
            detail: String::new(),
        }
    }

    fn rule() -> Arc<dyn Extractor> {
        let g = Gazetteer::from_entries("g", [(vec!["Juan"], EntityType::Per)]).unwrap();
        Arc::new(RuleExtractor {
            id: RULE_ID.into(),
            gazetteer: g,
            heuristic_caps: false,
        })
    }

    #[test]
    fn resolve_and_errors() {
        let mut reg = Registry::new();
        reg.register(descriptor(RULE_ID, ExtractorKind::Rule), Some(rule()))
            .unwrap();
        reg.register(descriptor(LEARNED_ID, ExtractorKind::Learned), None)
            .unwrap();
        assert_eq!(reg.ready_count(), 1);
        let ex = reg.resolve(RULE_ID).unwrap();
        let s = Sentence::from_surfaces(&["Juan", "vive"], 0);
        assert_eq!(ex.extract(&s).unwrap().mentions.len(), 1);
        assert!(matches!(reg.resolve("nope"), Err(RegistryError::UnknownExtractor(_))));
        assert!(matches!(reg.resolve(LEARNED_ID), Err(RegistryError::NotReady { .. })));
        assert!(matches!(
            reg.register(descriptor(RULE_ID, ExtractorKind::Rule), None),
            Err(RegistryError::Duplicate(_))
        ));
        let ids: Vec<String> = reg.list().into_iter().map(|d| d.id).collect();
        assert_eq!(ids, vec![LEARNED_ID, RULE_ID]);
    }
}
