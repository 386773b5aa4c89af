//! Corpus statistics: low-agreement story removal, emotion-label
//! distributions, and size counts.

use std::collections::BTreeMap;

use serde::Serialize;

use super::{Author, EmotionLabel, Story, StoryId};
use crate::error::{Error, Result};
use crate::metrics::population_std;

/// Outcome of threshold-based story removal.
#[derive(Debug, Clone)]
pub struct LowAgreementFilter {
    pub kept: Vec<Story>,
    pub removed: Vec<StoryId>,
    pub threshold: f64,
}

/// Remove stories whose agreement is strictly below
/// `mean(alphas) − k · std(alphas)` (population std). Every input story must
/// have an alpha value.
pub fn remove_low_agreement(
    stories: Vec<Story>,
    alphas: &BTreeMap<StoryId, f64>,
    k: f64,
) -> Result<LowAgreementFilter> {
    if k <= 0.0 {
        return Err(Error::InvalidValue {
            what: "threshold multiplier",
            msg: format!("k must be positive, got {k}"),
        });
    }
    if stories.is_empty() {
        return Err(Error::EmptyInput("no stories to filter"));
    }
    let mut values = Vec::with_capacity(stories.len());
    for s in &stories {
        let alpha = alphas.get(&s.story_id).ok_or_else(|| Error::MissingAlpha {
            story: s.story_id.to_string(),
        })?;
        values.push(*alpha);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let threshold = mean - k * population_std(&values);
    let mut kept = Vec::new();
    let mut removed = Vec::new();
    for (story, alpha) in stories.into_iter().zip(values) {
        if alpha < threshold {
            removed.push(story.story_id);
        } else {
            kept.push(story);
        }
    }
    Ok(LowAgreementFilter {
        kept,
        removed,
        threshold,
    })
}

/// Label percentages over all annotator labels pooled, overall and per
/// author. Every group's percentages cover all eight labels and sum to 100.
#[derive(Debug, Clone, Serialize)]
pub struct EmotionDistribution {
    pub overall: BTreeMap<EmotionLabel, f64>,
    pub per_author: BTreeMap<Author, BTreeMap<EmotionLabel, f64>>,
}

fn percentages(counts: &BTreeMap<EmotionLabel, u64>) -> BTreeMap<EmotionLabel, f64> {
    let total: u64 = counts.values().sum();
    EmotionLabel::ALL
        .iter()
        .map(|&l| {
            let c = counts.get(&l).copied().unwrap_or(0);
            let pct = if total == 0 {
                0.0
            } else {
                100.0 * c as f64 / total as f64
            };
            (l, pct)
        })
        .collect()
}

pub fn emotion_distribution(stories: &[Story]) -> EmotionDistribution {
    let mut overall: BTreeMap<EmotionLabel, u64> = BTreeMap::new();
    let mut per_author: BTreeMap<Author, BTreeMap<EmotionLabel, u64>> = BTreeMap::new();
    for story in stories {
        let author_counts = per_author.entry(story.author).or_default();
        for sentence in &story.sentences {
            for label in sentence.labels.values() {
                *overall.entry(*label).or_insert(0) += 1;
                *author_counts.entry(*label).or_insert(0) += 1;
            }
        }
    }
    EmotionDistribution {
        overall: percentages(&overall),
        per_author: per_author
            .iter()
            .map(|(a, counts)| (*a, percentages(counts)))
            .collect(),
    }
}

/// Story and sentence counts, overall and per author.
#[derive(Debug, Clone, Default, Serialize)]
pub struct AuthorCounts {
    pub stories: usize,
    pub sentences: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorpusStats {
    pub stories: usize,
    pub sentences: usize,
    pub per_author: BTreeMap<Author, AuthorCounts>,
}

pub fn corpus_stats(stories: &[Story]) -> CorpusStats {
    let mut per_author: BTreeMap<Author, AuthorCounts> = BTreeMap::new();
    for s in stories {
        let e = per_author.entry(s.author).or_default();
        e.stories += 1;
        e.sentences += s.len();
    }
    CorpusStats {
        stories: stories.len(),
        sentences: stories.iter().map(|s| s.len()).sum(),
        per_author,
    }
}
