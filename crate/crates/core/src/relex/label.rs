use alloc::string::String;
use core::fmt;
use core::str::FromStr;

/// Relation labels in canonical order. `NonRel` means no relation holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RelationLabel {
    GpeAff,
    Phys,
    Disc,
    EmpOrg,
    Art,
    NonRel,
}

pub const LABEL_COUNT: usize = 6;

impl RelationLabel {
    pub const ALL: [RelationLabel; LABEL_COUNT] = [
        RelationLabel::GpeAff,
        RelationLabel::Phys,
        RelationLabel::Disc,
        RelationLabel::EmpOrg,
        RelationLabel::Art,
        RelationLabel::NonRel,
    ];

    /// The five labels that denote an actual relation.
    pub const SUBSTANTIVE: [RelationLabel; 5] = [
        RelationLabel::GpeAff,
        RelationLabel::Phys,
        RelationLabel::Disc,
        RelationLabel::EmpOrg,
        RelationLabel::Art,
    ];

    pub fn code(self) -> &'static str {
        match self {
            RelationLabel::GpeAff => "GPE-AFF",
            RelationLabel::Phys => "PHYS",
            RelationLabel::Disc => "DISC",
            RelationLabel::EmpOrg => "EMP-ORG",
            RelationLabel::Art => "ART",
            RelationLabel::NonRel => "NON-REL",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn from_code(code: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.code() == code)
    }
}

impl fmt::Display for RelationLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown relation label `{0}`")]
pub struct UnknownLabel(pub String);

impl FromStr for RelationLabel {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_code(s).ok_or_else(|| UnknownLabel(s.into()))
    }
}

/// Argmax over label scores. An exact tie that includes `NON-REL` resolves to
/// `NON-REL`; any other tie to the lowest canonical index.
pub fn select_label(scores: &[f64; LABEL_COUNT]) -> RelationLabel {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if scores[RelationLabel::NonRel.index()] == max {
        return RelationLabel::NonRel;
    }
    let best = scores
        .iter()
        .position(|&s| s == max)
        .unwrap_or(RelationLabel::NonRel.index());
    RelationLabel::ALL[best]
}
