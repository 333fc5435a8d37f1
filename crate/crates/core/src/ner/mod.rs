//! Entity mentions, the BIO codec and the two self-contained extractors: a
//! longest-match gazetteer and an averaged-perceptron tagger.

mod bio;
mod gazetteer;
mod metrics;
mod tagger;
mod types;

pub use bio::{decode_bio, encode_bio, first_ill_formed, mention_from_tokens, tag_runs, BioError};
pub use gazetteer::{gazetteer_extract, Gazetteer, GazetteerError, FUNCTION_WORDS};
pub use metrics::{evaluate_mentions, EntityMetrics};
pub use tagger::{
    tag_sentence, tag_sequence, token_features, train_tagger, TaggerMetadata, TaggerModel, TaggerModelError,
    TrainError, TAGGER_FORMAT_VERSION,
};
pub use types::{BioTag, EntityMention, EntityType, InvalidTag, UnknownEntityType, TAG_COUNT};
