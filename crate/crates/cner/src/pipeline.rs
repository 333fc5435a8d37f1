//! Segmentation, entity extraction and relation extraction over one input.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use cner_core::fingerprint::Fingerprinter;
use cner_core::ner::{EntityMention, Gazetteer};
use cner_core::relex::{extract_relations, RelationLabel, RelexModel};
use cner_core::text::{segment, Abbreviations, Source};

use crate::config::ServiceConfig;
use crate::extractor::{
    ExtractorDescriptor, ExtractorKind, LearnedExtractor, Registry, RegistryError, RemoteExtractor, RuleExtractor,
    LEARNED_ID, RULE_ID,
};
use crate::formats::{load_abbreviations, load_gazetteer, load_relex_model, load_tagger_model, FormatError};
use crate::ingest::{ingest_file, IngestError, IngestOptions};
use crate::remote::RemoteError;
use crate::wire::{self, AnalysisResult, ApiError, ErrorCode, ModelInfo, ModelKind, Timing, WirePair, WireRelation};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalyzeOptions {
    pub extractor_id: String,
    pub include_non_rel: bool,
    /// Falls back to the configured distance when `None`.
    pub max_token_distance: Option<usize>,
}

/// Loaded resources needed to answer analysis requests. Immutable once built.
#[derive(Debug)]
pub struct Analyzer {
    pub registry: Registry,
    pub relex: Option<Arc<RelexModel>>,
    pub abbreviations: Abbreviations,
    pub ingest: IngestOptions,
    pub max_token_distance: usize,
    pub models: Vec<ModelInfo>,
    /// Problems found while loading optional resources.
    pub startup_warnings: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum StartupError {
    #[error("gazetteer {path}: {source}")]
    Gazetteer { path: String, source: FormatError },
    #[error("abbreviations {path}: {source}")]
    Abbreviations { path: String, source: FormatError },
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

impl Analyzer {
    /// Loads everything named in `config`. A malformed gazetteer or
    /// abbreviation list is fatal; a missing or malformed model only marks
    /// the extractor that needs it as not ready.
    pub fn from_config(config: &ServiceConfig) -> Result<Self, StartupError> {
        let mut warnings = Vec::new();
        let abbreviations = match &config.abbreviations {
            Some(path) => load_abbreviations(path).map_err(|source| StartupError::Abbreviations {
                path: path.display().to_string(),
                source,
            })?,
            None => Abbreviations::default(),
        };
        let gazetteer = match &config.gazetteer {
            Some(path) => load_gazetteer(path).map_err(|source| StartupError::Gazetteer {
                path: path.display().to_string(),
                source,
            })?,
            None => Gazetteer::new("empty"),
        };

        let mut registry = Registry::new();
        let mut models = Vec::new();
        let rule_detail = format!("gazetteer `{}` with {} entries", gazetteer.name(), gazetteer.len());
        registry
            .register(
                descriptor(RULE_ID, "Rule-based gazetteer", ExtractorKind::Rule, rule_detail),
                Some(Arc::new(RuleExtractor {
                    id: RULE_ID.into(),
                    gazetteer,
                    heuristic_caps: config.heuristic_caps,
                })),
            )
            .expect("fresh registry");

        let (learned, detail) = match &config.tagger_model {
            None => (None, "no tagger_model configured".to_string()),
            Some(path) => match load_tagger_model(path) {
                Ok(model) => {
                    let md = model.metadata();
                    models.push(ModelInfo {
                        kind: ModelKind::Tagger,
                        file: file_name(path),
                        format_version: md.format_version,
                        fingerprint: md.fingerprint.clone(),
                        created_at: md.created_at,
                    });
                    let extractor: Arc<dyn crate::extractor::Extractor> = Arc::new(LearnedExtractor {
                        id: LEARNED_ID.into(),
                        model: Arc::new(model),
                    });
                    (Some(extractor), format!("model {}", file_name(path)))
                }
                Err(e) => {
                    let detail = format!("cannot load {}: {e}", path.display());
                    warnings.push(detail.clone());
                    (None, detail)
                }
            },
        };
        registry
            .register(
                descriptor(LEARNED_ID, "Averaged-perceptron tagger", ExtractorKind::Learned, detail),
                learned,
            )
            .expect("fresh registry");

        for remote in &config.remotes {
            let (extractor, detail): (Option<Arc<dyn crate::extractor::Extractor>>, String) = match &remote.endpoint {
                Some(endpoint) => (
                    Some(Arc::new(RemoteExtractor::new(&remote.id, endpoint, remote.timeout))),
                    endpoint.clone(),
                ),
                None => (None, "no endpoint configured".into()),
            };
            let name = if remote.id == crate::extractor::REMOTE_ID {
                "Remote adapter".to_string()
            } else {
                remote.display_name.clone()
            };
            if let Err(e) = registry.register(descriptor(&remote.id, &name, ExtractorKind::Remote, detail), extractor) {
                warnings.push(e.to_string());
            }
        }

        let relex = match &config.relex_model {
            None => None,
            Some(path) => match load_relex_model(path) {
                Ok(model) => {
                    let md = model.metadata();
                    models.push(ModelInfo {
                        kind: ModelKind::Relex,
                        file: file_name(path),
                        format_version: md.format_version,
                        fingerprint: md.fingerprint.clone(),
                        created_at: md.created_at,
                    });
                    Some(Arc::new(model))
                }
                Err(e) => {
                    warnings.push(format!("cannot load {}: {e}", path.display()));
                    None
                }
            },
        };

        Ok(Analyzer {
            registry,
            relex,
            abbreviations,
            ingest: IngestOptions {
                max_bytes: config.max_upload_bytes,
                doc_converter: config.doc_converter.clone(),
            },
            max_token_distance: config.max_token_distance,
            models,
            startup_warnings: warnings,
        })
    }

    /// Full analysis of raw text.
    pub fn analyze(&self, raw: &str, source: Source, options: &AnalyzeOptions) -> Result<AnalysisResult, ApiError> {
        self.analyze_with_warnings(raw, source, options, Vec::new())
    }

    /// Decodes an uploaded file, then analyzes it.
    pub fn analyze_file(
        &self,
        filename: &str,
        bytes: &[u8],
        options: &AnalyzeOptions,
    ) -> Result<AnalysisResult, ApiError> {
        self.registry.resolve(&options.extractor_id).map_err(registry_error)?;
        let ingested = ingest_file(filename, bytes, &self.ingest).map_err(ingest_error)?;
        self.analyze_with_warnings(
            &ingested.text,
            Source::File(filename.to_string()),
            options,
            ingested.warnings,
        )
    }

    fn analyze_with_warnings(
        &self,
        raw: &str,
        source: Source,
        options: &AnalyzeOptions,
        mut warnings: Vec<String>,
    ) -> Result<AnalysisResult, ApiError> {
        let max_distance = match options.max_token_distance {
            Some(0) => {
                return Err(ApiError::new(
                    ErrorCode::MalformedRequest,
                    "max_token_distance must be positive",
                ))
            }
            Some(d) => d,
            None => self.max_token_distance,
        };
        let extractor = self.registry.resolve(&options.extractor_id).map_err(registry_error)?;

        let started = Instant::now();
        let id = {
            let mut fp = Fingerprinter::new();
            fp.field(&source.to_string()).field(raw);
            fp.finish()
        };
        let document = segment(raw, id, source, &self.abbreviations);
        let segment_ms = elapsed_ms(started);

        let started = Instant::now();
        let mut per_sentence: Vec<Vec<EntityMention>> = Vec::with_capacity(document.sentences.len());
        for sentence in &document.sentences {
            let mut extraction = extractor.extract(sentence).map_err(|e| match e {
                RemoteError::Unavailable(m) | RemoteError::Protocol(m) => {
                    ApiError::new(ErrorCode::RemoteUnavailable, format!("{}: {m}", options.extractor_id))
                }
            })?;
            extraction.mentions.sort_by_key(|m| m.token_range);
            warnings.append(&mut extraction.warnings);
            per_sentence.push(extraction.mentions);
        }
        let ner_ms = elapsed_ms(started);

        let started = Instant::now();
        let mut relations = Vec::new();
        let mut offset = 0;
        match &self.relex {
            Some(model) => {
                for (sentence, mentions) in document.sentences.iter().zip(&per_sentence) {
                    let index_of = |m: &EntityMention| {
                        offset
                            + mentions
                                .iter()
                                .position(|x| x.token_range == m.token_range)
                                .expect("pair arguments come from this sentence")
                    };
                    for instance in extract_relations(sentence, mentions, model, max_distance) {
                        if instance.label == RelationLabel::NonRel && !options.include_non_rel {
                            continue;
                        }
                        relations.push(WireRelation {
                            pair: WirePair {
                                sentence_index: sentence.index,
                                arg1: index_of(&instance.pair.arg1),
                                arg2: index_of(&instance.pair.arg2),
                            },
                            label: instance.label.code().to_string(),
                            scores: instance.scores,
                        });
                    }
                    offset += mentions.len();
                }
            }
            None => warnings.push("no relation model loaded; relations omitted".into()),
        }
        let relex_ms = elapsed_ms(started);

        Ok(AnalysisResult {
            document: wire::document(&document),
            mentions: per_sentence.iter().flatten().map(wire::mention).collect(),
            relations,
            extractor_id: options.extractor_id.clone(),
            timing: Timing {
                segment_ms,
                ner_ms,
                relex_ms,
            },
            warnings,
        })
    }
}

fn descriptor(id: &str, name: &str, kind: ExtractorKind, detail: String) -> ExtractorDescriptor {
    ExtractorDescriptor {
        id: id.into(),
        display_name: name.into(),
        kind,
        ready: false,
        detail,
    }
}

fn elapsed_ms(since: Instant) -> u64 {
    since.elapsed().as_millis().try_into().unwrap_or(u64::MAX)
}

pub fn registry_error(e: RegistryError) -> ApiError {
    let code = match e {
        RegistryError::UnknownExtractor(_) | RegistryError::Duplicate(_) => ErrorCode::UnknownExtractor,
        RegistryError::NotReady { .. } => ErrorCode::ExtractorNotReady,
    };
    ApiError::new(code, e.to_string())
}

pub fn ingest_error(e: IngestError) -> ApiError {
    let code = match e {
        IngestError::UnsupportedFormat(_) => ErrorCode::UnsupportedFormat,
        IngestError::CorruptFile(_) => ErrorCode::CorruptFile,
        IngestError::PayloadTooLarge { .. } => ErrorCode::PayloadTooLarge,
    };
    ApiError::new(code, e.to_string())
}
