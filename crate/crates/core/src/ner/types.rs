use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use crate::text::Span;

/// ACE entity types, in declaration order. The order fixes tag indices and
/// tie-breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntityType {
    Per,
    Org,
    Fac,
    Loc,
    Gpe,
    Veh,
    Wea,
}

impl EntityType {
    pub const ALL: [EntityType; 7] = [
        EntityType::Per,
        EntityType::Org,
        EntityType::Fac,
        EntityType::Loc,
        EntityType::Gpe,
        EntityType::Veh,
        EntityType::Wea,
    ];

    pub fn code(self) -> &'static str {
        match self {
            EntityType::Per => "PER",
            EntityType::Org => "ORG",
            EntityType::Fac => "FAC",
            EntityType::Loc => "LOC",
            EntityType::Gpe => "GPE",
            EntityType::Veh => "VEH",
            EntityType::Wea => "WEA",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_code(code: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.code() == code)
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown entity type `{0}`")]
pub struct UnknownEntityType(pub String);

impl FromStr for EntityType {
    type Err = UnknownEntityType;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_code(s).ok_or_else(|| UnknownEntityType(s.into()))
    }
}

/// A per-token BIO tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BioTag {
    O,
    B(EntityType),
    I(EntityType),
}

/// Number of distinct tags: `O` plus `B-`/`I-` for each entity type.
pub const TAG_COUNT: usize = 1 + 2 * EntityType::ALL.len();

impl BioTag {
    /// All tags in tie-break order: `O`, then every `B-*`, then every `I-*`.
    pub fn all() -> [BioTag; TAG_COUNT] {
        let mut tags = [BioTag::O; TAG_COUNT];
        for t in EntityType::ALL {
            tags[1 + t.index()] = BioTag::B(t);
            tags[1 + EntityType::ALL.len() + t.index()] = BioTag::I(t);
        }
        tags
    }

    pub fn index(self) -> usize {
        match self {
            BioTag::O => 0,
            BioTag::B(t) => 1 + t.index(),
            BioTag::I(t) => 1 + EntityType::ALL.len() + t.index(),
        }
    }

    pub fn from_index(index: usize) -> Option<BioTag> {
        Self::all().get(index).copied()
    }

    pub fn entity_type(self) -> Option<EntityType> {
        match self {
            BioTag::O => None,
            BioTag::B(t) | BioTag::I(t) => Some(t),
        }
    }
}

impl fmt::Display for BioTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BioTag::O => f.write_str("O"),
            BioTag::B(t) => write!(f, "B-{t}"),
            BioTag::I(t) => write!(f, "I-{t}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid BIO tag `{0}`")]
pub struct InvalidTag(pub String);

impl FromStr for BioTag {
    type Err = InvalidTag;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "O" {
            return Ok(BioTag::O);
        }
        let invalid = || InvalidTag(s.into());
        let (prefix, code) = s.split_once('-').ok_or_else(invalid)?;
        let ty = EntityType::from_code(code).ok_or_else(invalid)?;
        match prefix {
            "B" => Ok(BioTag::B(ty)),
            "I" => Ok(BioTag::I(ty)),
            _ => Err(invalid()),
        }
    }
}

/// A typed, contiguous token span inside one sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityMention {
    /// Document-absolute character span covering the mention's tokens.
    pub span: Span,
    /// Inclusive `(first, last)` token indices within the sentence.
    pub token_range: (usize, usize),
    pub entity_type: EntityType,
    pub sentence_index: usize,
    pub extractor_id: String,
    pub confidence: f64,
}

impl EntityMention {
    pub fn first(&self) -> usize {
        self.token_range.0
    }

    pub fn last(&self) -> usize {
        self.token_range.1
    }

    /// Equality on everything except attribution and confidence.
    pub fn same_annotation(&self, other: &EntityMention) -> bool {
        self.span == other.span
            && self.token_range == other.token_range
            && self.entity_type == other.entity_type
            && self.sentence_index == other.sentence_index
    }
}
