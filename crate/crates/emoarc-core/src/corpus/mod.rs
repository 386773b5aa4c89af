//! Corpus data model plus ingestion, sentence splitting, agreement-based
//! filtering, and author-stratified partitioning.
//!
//! Labeled (discrete-emotion, multi-annotator) and unlabeled corpora share
//! one data model: a [`Story`] is an ordered list of sentences, and the
//! [`Author::Other`] variant covers documents outside the three annotated
//! authors.

mod ingest;
mod partition;
mod splitter;
mod stats;

pub use ingest::{
    export_labeled, export_unlabeled, ingest_labeled, ingest_unlabeled_jsonl,
    ingest_unlabeled_text,
};
pub use partition::{
    apply_manifest, export_manifest, load_manifest, stratified_split, SplitTargets,
};
pub use splitter::{split_sentences, ABBREVIATIONS};
pub use stats::{corpus_stats, emotion_distribution, remove_low_agreement, AuthorCounts,
    CorpusStats, EmotionDistribution, LowAgreementFilter};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The eight discrete emotion categories of the labeled corpus.
///
/// Annotator 3 uses the reduced scheme: the same set minus the two surprise
/// variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmotionLabel {
    Anger,
    Disgust,
    Fear,
    Happiness,
    NegativeSurprise,
    Neutral,
    PositiveSurprise,
    Sadness,
}

impl EmotionLabel {
    /// All eight labels, in token order.
    pub const ALL: [EmotionLabel; 8] = [
        EmotionLabel::Anger,
        EmotionLabel::Disgust,
        EmotionLabel::Fear,
        EmotionLabel::Happiness,
        EmotionLabel::NegativeSurprise,
        EmotionLabel::Neutral,
        EmotionLabel::PositiveSurprise,
        EmotionLabel::Sadness,
    ];

    /// The reduced six-label scheme (no surprise variants).
    pub const REDUCED: [EmotionLabel; 6] = [
        EmotionLabel::Anger,
        EmotionLabel::Disgust,
        EmotionLabel::Fear,
        EmotionLabel::Happiness,
        EmotionLabel::Neutral,
        EmotionLabel::Sadness,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            EmotionLabel::Anger => "anger",
            EmotionLabel::Disgust => "disgust",
            EmotionLabel::Fear => "fear",
            EmotionLabel::Happiness => "happiness",
            EmotionLabel::NegativeSurprise => "negative_surprise",
            EmotionLabel::Neutral => "neutral",
            EmotionLabel::PositiveSurprise => "positive_surprise",
            EmotionLabel::Sadness => "sadness",
        }
    }

    pub fn is_surprise(&self) -> bool {
        matches!(
            self,
            EmotionLabel::PositiveSurprise | EmotionLabel::NegativeSurprise
        )
    }
}

impl fmt::Display for EmotionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EmotionLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EmotionLabel::ALL
            .iter()
            .find(|l| l.as_str() == s)
            .copied()
            .ok_or_else(|| Error::InvalidValue {
                what: "emotion label",
                msg: format!("unknown token '{s}'"),
            })
    }
}

/// Annotator identifier. Annotator 3 is bound to the reduced label scheme.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct AnnotatorId(pub u8);

impl AnnotatorId {
    /// The label scheme this annotator selects from.
    pub fn scheme(&self) -> Vec<EmotionLabel> {
        if self.0 == 3 {
            EmotionLabel::REDUCED.to_vec()
        } else {
            EmotionLabel::ALL.to_vec()
        }
    }

    pub fn allows(&self, label: EmotionLabel) -> bool {
        self.0 != 3 || !label.is_surprise()
    }
}

impl fmt::Display for AnnotatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "A{}", self.0)
    }
}

/// Story author. `Other` covers unlabeled-corpus documents and any author
/// token outside the three annotated ones.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum Author {
    Grimm,
    #[serde(rename = "HCA")]
    Hca,
    Potter,
    Other,
}

impl Author {
    pub const ALL: [Author; 4] = [Author::Grimm, Author::Hca, Author::Potter, Author::Other];

    pub fn as_str(&self) -> &'static str {
        match self {
            Author::Grimm => "Grimm",
            Author::Hca => "HCA",
            Author::Potter => "Potter",
            Author::Other => "Other",
        }
    }

    /// Tolerant parse: known names (and common aliases) map to their
    /// variant, anything else is `Other`.
    pub fn parse(token: &str) -> Author {
        match token.trim().to_ascii_lowercase().as_str() {
            "grimm" | "grimms" => Author::Grimm,
            "hca" | "andersen" => Author::Hca,
            "potter" => Author::Potter,
            _ => Author::Other,
        }
    }
}

impl fmt::Display for Author {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Story identifier, ordered lexicographically.
#[derive(
    Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct StoryId(String);

impl StoryId {
    pub fn new(id: impl Into<String>) -> StoryId {
        StoryId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StoryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for StoryId {
    fn from(s: &str) -> StoryId {
        StoryId::new(s)
    }
}

/// One sentence with its per-annotator labels (possibly none for unlabeled
/// documents).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedSentence {
    pub story_id: StoryId,
    pub index: usize,
    pub text: String,
    pub labels: BTreeMap<AnnotatorId, EmotionLabel>,
}

/// An ordered, non-empty list of sentences sharing one story id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Story {
    pub story_id: StoryId,
    pub author: Author,
    pub sentences: Vec<AnnotatedSentence>,
}

impl Story {
    /// Validating constructor: non-empty, indices contiguous from 0, ids
    /// consistent, and reduced-scheme labels legal for annotator 3.
    pub fn new(story_id: StoryId, author: Author, sentences: Vec<AnnotatedSentence>) -> Result<Story> {
        if sentences.is_empty() {
            return Err(Error::EmptyInput("story has no sentences"));
        }
        for (i, s) in sentences.iter().enumerate() {
            if s.story_id != story_id {
                return Err(Error::InvalidValue {
                    what: "story",
                    msg: format!(
                        "sentence {} carries story id '{}', expected '{}'",
                        i, s.story_id, story_id
                    ),
                });
            }
            if s.index != i {
                return Err(Error::InvalidValue {
                    what: "story",
                    msg: format!("sentence indices not contiguous: expected {i}, got {}", s.index),
                });
            }
            for (annotator, label) in &s.labels {
                if !annotator.allows(*label) {
                    return Err(Error::SchemeViolation {
                        annotator: annotator.0,
                        label: label.to_string(),
                    });
                }
            }
        }
        Ok(Story {
            story_id,
            author,
            sentences,
        })
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Sentence texts in story order.
    pub fn texts(&self) -> Vec<&str> {
        self.sentences.iter().map(|s| s.text.as_str()).collect()
    }

    /// Annotators that labeled every sentence of this story.
    pub fn full_coverage_annotators(&self) -> Vec<AnnotatorId> {
        let Some(first) = self.sentences.first() else {
            return Vec::new();
        };
        first
            .labels
            .keys()
            .copied()
            .filter(|a| self.sentences.iter().all(|s| s.labels.contains_key(a)))
            .collect()
    }
}

/// Partition name for corpus splits.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum PartitionName {
    Train,
    Dev,
    Test,
}

impl PartitionName {
    pub const ALL: [PartitionName; 3] = [PartitionName::Train, PartitionName::Dev, PartitionName::Test];

    pub fn as_str(&self) -> &'static str {
        match self {
            PartitionName::Train => "train",
            PartitionName::Dev => "dev",
            PartitionName::Test => "test",
        }
    }
}

impl fmt::Display for PartitionName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PartitionName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(PartitionName::Train),
            "dev" => Ok(PartitionName::Dev),
            "test" => Ok(PartitionName::Test),
            _ => Err(Error::InvalidValue {
                what: "partition name",
                msg: format!("unknown token '{s}'"),
            }),
        }
    }
}

/// One named set of story ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub name: PartitionName,
    pub story_ids: std::collections::BTreeSet<StoryId>,
}

/// One unlabeled document: ordered sentence texts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnlabeledDoc {
    pub doc_id: String,
    pub sentences: Vec<String>,
}

/// A set of unlabeled documents, in stable (ingestion) order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UnlabeledCorpus {
    pub documents: Vec<UnlabeledDoc>,
}

impl UnlabeledCorpus {
    pub fn sentence_count(&self) -> usize {
        self.documents.iter().map(|d| d.sentences.len()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sentence(id: &str, index: usize, labels: &[(u8, EmotionLabel)]) -> AnnotatedSentence {
        AnnotatedSentence {
            story_id: StoryId::new(id),
            index,
            text: format!("sentence {index}"),
            labels: labels
                .iter()
                .map(|(a, l)| (AnnotatorId(*a), *l))
                .collect(),
        }
    }

    #[test]
    fn eight_labels_and_reduced_subset() {
        assert_eq!(EmotionLabel::ALL.len(), 8);
        assert_eq!(EmotionLabel::REDUCED.len(), 6);
        assert!(EmotionLabel::REDUCED.iter().all(|l| !l.is_surprise()));
    }

    #[test]
    fn label_tokens_round_trip() {
        for label in EmotionLabel::ALL {
            assert_eq!(label.as_str().parse::<EmotionLabel>().unwrap(), label);
        }
        assert!("positive surprise".parse::<EmotionLabel>().is_err());
    }

    #[test]
    fn story_requires_contiguous_indices() {
        let s = vec![
            sentence("s", 0, &[(1, EmotionLabel::Neutral)]),
            sentence("s", 2, &[(1, EmotionLabel::Neutral)]),
        ];
        assert!(Story::new(StoryId::new("s"), Author::Grimm, s).is_err());
    }

    #[test]
    fn story_rejects_reduced_scheme_violation() {
        let s = vec![sentence("s", 0, &[(3, EmotionLabel::PositiveSurprise)])];
        let err = Story::new(StoryId::new("s"), Author::Grimm, s).unwrap_err();
        assert!(matches!(err, Error::SchemeViolation { annotator: 3, .. }));
    }

    #[test]
    fn full_coverage_annotators_intersects() {
        let mut second = sentence("s", 1, &[(1, EmotionLabel::Fear)]);
        second.labels.insert(AnnotatorId(2), EmotionLabel::Fear);
        let story = Story::new(
            StoryId::new("s"),
            Author::Hca,
            vec![
                sentence("s", 0, &[(1, EmotionLabel::Neutral), (3, EmotionLabel::Neutral)]),
                second,
            ],
        )
        .unwrap();
        assert_eq!(story.full_coverage_annotators(), vec![AnnotatorId(1)]);
    }

    #[test]
    fn author_parse_aliases() {
        assert_eq!(Author::parse("Grimms"), Author::Grimm);
        assert_eq!(Author::parse("andersen"), Author::Hca);
        assert_eq!(Author::parse("POTTER"), Author::Potter);
        assert_eq!(Author::parse("Tolkien"), Author::Other);
    }
}
