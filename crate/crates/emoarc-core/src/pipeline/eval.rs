//! Evaluation at every granularity: overall (concatenated), story-wise,
//! author-wise, story-part (quintiles), and absolute-error statistics.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::corpus::{Author, Partition, PartitionName, StoryId};
use crate::error::{Error, Result};
use crate::fusion::{Dimension, TrajectorySignal};
use crate::metrics::{ccc, error_stats, pearson, population_std, ErrorStats};
use crate::predict::PredictionSet;

/// Per-dimension evaluation of one partition.
#[derive(Debug, Clone, Serialize)]
pub struct DimensionEval {
    /// CCC over the concatenation of all stories, ascending story id
    pub overall_ccc: f64,
    /// mean of the defined per-story CCCs
    pub story_ccc_mean: f64,
    /// population std of the defined per-story CCCs
    pub story_ccc_std: f64,
    pub per_story_ccc: BTreeMap<StoryId, f64>,
    /// CCC over each author's concatenated stories; undefined entries omitted
    pub author_ccc: BTreeMap<Author, f64>,
}

/// Full evaluation report. Quintiles and error statistics pool the dev and
/// test partitions; a quintile entry is null when its CCC is undefined.
#[derive(Debug, Clone, Serialize)]
pub struct EvaluationReport {
    pub schema_version: u32,
    pub run_id: String,
    pub config_digest: String,
    pub partitions: BTreeMap<PartitionName, BTreeMap<Dimension, DimensionEval>>,
    pub quintiles: BTreeMap<Dimension, Vec<Option<f64>>>,
    pub error_stats: BTreeMap<Dimension, ErrorStats>,
}

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Quintile sizes: `n/5` each, with the remainder accruing to the earlier
/// parts (part p gets one extra when `p < n mod 5`).
pub fn quintile_sizes(n: usize) -> [usize; 5] {
    let base = n / 5;
    let rem = n % 5;
    let mut sizes = [base; 5];
    for (p, s) in sizes.iter_mut().enumerate() {
        if p < rem {
            *s += 1;
        }
    }
    sizes
}

/// 0-based part index for each sentence index of a story of length `n`.
pub fn quintile_assignment(n: usize) -> Vec<usize> {
    let sizes = quintile_sizes(n);
    let mut out = Vec::with_capacity(n);
    for (part, &size) in sizes.iter().enumerate() {
        out.extend(std::iter::repeat(part).take(size));
    }
    out
}

struct StoryPair<'a> {
    id: &'a StoryId,
    gold: &'a TrajectorySignal,
    pred: &'a TrajectorySignal,
}

fn collect_pairs<'a>(
    ids: impl IntoIterator<Item = &'a StoryId>,
    gold: &'a BTreeMap<StoryId, TrajectorySignal>,
    preds: &'a PredictionSet,
) -> Result<Vec<StoryPair<'a>>> {
    let mut out = Vec::new();
    for id in ids {
        let g = gold.get(id).ok_or_else(|| Error::UnknownStory {
            story: id.to_string(),
        })?;
        let p = preds.signals.get(id).ok_or_else(|| Error::CoverageGap {
            story: id.to_string(),
            index: 0,
        })?;
        if p.len() != g.len() {
            return Err(Error::CoverageGap {
                story: id.to_string(),
                index: p.len().min(g.len()),
            });
        }
        out.push(StoryPair { id, gold: g, pred: p });
    }
    Ok(out)
}

fn concat_ccc(pairs: &[StoryPair<'_>], d: Dimension) -> Result<f64> {
    let mut y = Vec::new();
    let mut y_hat = Vec::new();
    for p in pairs {
        y.extend_from_slice(p.gold.dimension(d));
        y_hat.extend_from_slice(p.pred.dimension(d));
    }
    ccc(&y, &y_hat)
}

fn dimension_eval(
    pairs: &[StoryPair<'_>],
    d: Dimension,
    authors: &BTreeMap<StoryId, Author>,
) -> Result<DimensionEval> {
    let overall_ccc = concat_ccc(pairs, d)?;
    let mut per_story_ccc = BTreeMap::new();
    for p in pairs {
        // stories whose CCC is undefined (too short or 0/0) are skipped
        if let Ok(v) = ccc(p.gold.dimension(d), p.pred.dimension(d)) {
            per_story_ccc.insert(p.id.clone(), v);
        }
    }
    let values: Vec<f64> = per_story_ccc.values().copied().collect();
    let (story_ccc_mean, story_ccc_std) = if values.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        (
            values.iter().sum::<f64>() / values.len() as f64,
            population_std(&values),
        )
    };
    let mut author_ccc = BTreeMap::new();
    for author in Author::ALL {
        let subset: Vec<&StoryPair<'_>> = pairs
            .iter()
            .filter(|p| authors.get(p.id) == Some(&author))
            .collect();
        if subset.is_empty() {
            continue;
        }
        let mut y = Vec::new();
        let mut y_hat = Vec::new();
        for p in subset {
            y.extend_from_slice(p.gold.dimension(d));
            y_hat.extend_from_slice(p.pred.dimension(d));
        }
        if let Ok(v) = ccc(&y, &y_hat) {
            author_ccc.insert(author, v);
        }
    }
    Ok(DimensionEval {
        overall_ccc,
        story_ccc_mean,
        story_ccc_std,
        per_story_ccc,
        author_ccc,
    })
}

/// Evaluate predictions against gold over the given partitions. Quintile
/// CCCs and error statistics pool the dev and test partitions.
pub fn evaluate_run(
    preds: &PredictionSet,
    gold: &BTreeMap<StoryId, TrajectorySignal>,
    partitions: &[Partition],
    authors: &BTreeMap<StoryId, Author>,
    run_id: &str,
    config_digest: &str,
) -> Result<EvaluationReport> {
    let mut report_partitions = BTreeMap::new();
    for partition in partitions {
        if partition.story_ids.is_empty() {
            continue;
        }
        let pairs = collect_pairs(partition.story_ids.iter(), gold, preds)?;
        let mut per_dim = BTreeMap::new();
        for d in Dimension::BOTH {
            per_dim.insert(d, dimension_eval(&pairs, d, authors)?);
        }
        report_partitions.insert(partition.name, per_dim);
    }

    // dev + test pool for quintiles and error stats
    let pooled_ids: Vec<&StoryId> = partitions
        .iter()
        .filter(|p| matches!(p.name, PartitionName::Dev | PartitionName::Test))
        .flat_map(|p| p.story_ids.iter())
        .collect();
    if pooled_ids.is_empty() {
        return Err(Error::EmptyPartition("dev+test".to_string()));
    }
    let pooled = collect_pairs(pooled_ids.into_iter(), gold, preds)?;

    let mut quintiles = BTreeMap::new();
    let mut errors = BTreeMap::new();
    for d in Dimension::BOTH {
        let mut parts: [(Vec<f64>, Vec<f64>); 5] = Default::default();
        let mut abs_errors = Vec::new();
        for p in &pooled {
            let assignment = quintile_assignment(p.gold.len());
            debug_assert_eq!(assignment.len(), p.gold.len());
            let g = p.gold.dimension(d);
            let h = p.pred.dimension(d);
            for i in 0..g.len() {
                parts[assignment[i]].0.push(g[i]);
                parts[assignment[i]].1.push(h[i]);
                abs_errors.push((g[i] - h[i]).abs());
            }
        }
        let ccc_per_part: Vec<Option<f64>> = parts
            .iter()
            .map(|(y, y_hat)| ccc(y, y_hat).ok())
            .collect();
        quintiles.insert(d, ccc_per_part);
        errors.insert(d, error_stats(&abs_errors)?);
    }

    Ok(EvaluationReport {
        schema_version: REPORT_SCHEMA_VERSION,
        run_id: run_id.to_string(),
        config_digest: config_digest.to_string(),
        partitions: report_partitions,
        quintiles,
        error_stats: errors,
    })
}

/// Inputs to the per-story correlation analysis, aligned by story.
#[derive(Debug, Clone)]
pub struct StoryCorrelationRow {
    pub story_id: StoryId,
    pub model_ccc_v: f64,
    pub model_ccc_a: f64,
    pub human_ccc_v: f64,
    pub human_ccc_a: f64,
}

/// The three story-level Pearson correlations: model valence-vs-arousal CCC,
/// and model CCC against human agreement per dimension.
#[derive(Debug, Clone, Serialize)]
pub struct StoryCorrelations {
    pub v_vs_a: f64,
    pub model_vs_human_v: f64,
    pub model_vs_human_a: f64,
}

pub fn story_correlation_analysis(rows: &[StoryCorrelationRow]) -> Result<StoryCorrelations> {
    if rows.len() < 3 {
        return Err(Error::TooShort {
            min: 3,
            got: rows.len(),
        });
    }
    let mv: Vec<f64> = rows.iter().map(|r| r.model_ccc_v).collect();
    let ma: Vec<f64> = rows.iter().map(|r| r.model_ccc_a).collect();
    let hv: Vec<f64> = rows.iter().map(|r| r.human_ccc_v).collect();
    let ha: Vec<f64> = rows.iter().map(|r| r.human_ccc_a).collect();
    Ok(StoryCorrelations {
        v_vs_a: pearson(&mv, &ma)?,
        model_vs_human_v: pearson(&mv, &hv)?,
        model_vs_human_a: pearson(&ma, &ha)?,
    })
}

/// Story-wise human agreement: mean pairwise CCC between the annotators'
/// mapped signals, per dimension. Pairs with undefined CCC are skipped;
/// stories with no defined pair are omitted.
pub fn human_story_agreement(
    stories: &[crate::corpus::Story],
    table: &crate::mapping::LabelMap,
) -> BTreeMap<StoryId, (f64, f64)> {
    let mut out = BTreeMap::new();
    for story in stories {
        let annotators = story.full_coverage_annotators();
        let signals: Vec<TrajectorySignal> = annotators
            .iter()
            .filter_map(|&a| crate::mapping::build_annotator_signal(story, a, table).ok())
            .collect();
        let mut agreement = (Vec::new(), Vec::new());
        for i in 0..signals.len() {
            for j in (i + 1)..signals.len() {
                if let Ok(v) = ccc(&signals[i].valence, &signals[j].valence) {
                    agreement.0.push(v);
                }
                if let Ok(a) = ccc(&signals[i].arousal, &signals[j].arousal) {
                    agreement.1.push(a);
                }
            }
        }
        if !agreement.0.is_empty() && !agreement.1.is_empty() {
            let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
            out.insert(story.story_id.clone(), (mean(&agreement.0), mean(&agreement.1)));
        }
    }
    out
}
