//! Agreement and evaluation mathematics: CCC, Pearson, Krippendorff's alpha,
//! confusion matrices, and absolute-error statistics.
//!
//! All moments are population moments (1/n). For Pearson the scaling cancels,
//! for CCC it does not — the bias term changes with the convention — so the
//! choice is fixed here and observable in every downstream number.
//! Summation is sequential in index order, making results bit-reproducible.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::corpus::{AnnotatorId, Author, EmotionLabel, Story, StoryId};
use crate::error::{Error, Result};

/// Population mean.
fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn is_constant(xs: &[f64]) -> bool {
    xs.iter().all(|&v| v == xs[0])
}

/// Population variance and covariance of two equal-length sequences.
///
/// Exactly-constant inputs are treated as zero-variance (and zero-covariance)
/// rather than trusting floating-point cancellation to produce a clean zero.
fn moments(y: &[f64], y_hat: &[f64]) -> (f64, f64, f64, f64, f64) {
    let n = y.len() as f64;
    let my = mean(y);
    let mh = mean(y_hat);
    let const_y = is_constant(y);
    let const_h = is_constant(y_hat);
    let mut var_y = 0.0;
    let mut var_h = 0.0;
    let mut cov = 0.0;
    if !(const_y && const_h) {
        for (a, b) in y.iter().zip(y_hat) {
            let da = if const_y { 0.0 } else { a - my };
            let db = if const_h { 0.0 } else { b - mh };
            var_y += da * da;
            var_h += db * db;
            cov += da * db;
        }
        var_y /= n;
        var_h /= n;
        cov /= n;
    }
    let my = if const_y { y[0] } else { my };
    let mh = if const_h { y_hat[0] } else { mh };
    (my, mh, var_y, var_h, cov)
}

fn check_lengths(y: &[f64], y_hat: &[f64]) -> Result<()> {
    if y.len() != y_hat.len() {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: y_hat.len(),
        });
    }
    if y.len() < 2 {
        return Err(Error::TooShort {
            min: 2,
            got: y.len(),
        });
    }
    Ok(())
}

/// Concordance Correlation Coefficient between two signals:
/// `2·Cov(Y,Ŷ) / (Var(Y) + Var(Ŷ) + (mean(Y) − mean(Ŷ))²)`.
///
/// A single constant signal still yields a defined value (the mean-difference
/// term keeps the denominator alive); only the 0/0 case — both signals
/// constant with equal means — is an error.
pub fn ccc(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    check_lengths(y, y_hat)?;
    let (my, mh, var_y, var_h, cov) = moments(y, y_hat);
    let bias = (my - mh) * (my - mh);
    let denom = var_y + var_h + bias;
    if denom == 0.0 {
        return Err(Error::Degenerate(
            "CCC is 0/0: both signals constant with equal means".into(),
        ));
    }
    Ok(2.0 * cov / denom)
}

/// Pearson product-moment correlation. Errors on constant input.
pub fn pearson(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    check_lengths(y, y_hat)?;
    let (_, _, var_y, var_h, cov) = moments(y, y_hat);
    if var_y == 0.0 || var_h == 0.0 {
        return Err(Error::Degenerate(
            "Pearson correlation undefined for a constant signal".into(),
        ));
    }
    Ok(cov / (var_y.sqrt() * var_h.sqrt()))
}

// ---------------------------------------------------------------------------
// Krippendorff's alpha (nominal level)
// ---------------------------------------------------------------------------

/// Nominal-level Krippendorff's alpha over units of labels, via the
/// coincidence-matrix formulation. Units with fewer than two labels
/// contribute nothing. When every pairable label in the data is identical,
/// the expected disagreement is zero and alpha is defined as 1.0.
pub fn krippendorff_alpha<T: Ord + Clone>(units: &[Vec<T>]) -> Result<f64> {
    // coincidence counts: o[c][k] = sum over units of (#ordered (c,k) pairs) / (m_u - 1)
    let mut on_label: BTreeMap<T, f64> = BTreeMap::new(); // n_c = row sums
    let mut agree = 0.0; // sum of diagonal o_cc
    let mut n = 0.0;
    let mut any_pairable = false;
    for unit in units {
        let m = unit.len();
        if m < 2 {
            continue;
        }
        any_pairable = true;
        let w = 1.0 / (m as f64 - 1.0);
        let mut counts: BTreeMap<&T, usize> = BTreeMap::new();
        for v in unit {
            *counts.entry(v).or_insert(0) += 1;
        }
        for (label, &c) in &counts {
            // ordered pairs (label, label) within the unit: c·(c−1)
            agree += (c * (c - 1)) as f64 * w;
            // row sum over all co-labels: c·(m−1)
            let row = c as f64 * (m as f64 - 1.0) * w;
            *on_label.entry((*label).clone()).or_insert(0.0) += row;
            n += row;
        }
    }
    if !any_pairable {
        return Err(Error::Degenerate(
            "Krippendorff's alpha needs at least one unit with two labels".into(),
        ));
    }
    // D_o = (1/n)·sum_{c≠k} o_ck ; D_e = (1/(n(n−1)))·sum_{c≠k} n_c·n_k
    let d_obs = (n - agree) / n;
    let sum_sq: f64 = on_label.values().map(|v| v * v).sum();
    let d_exp = (n * n - sum_sq) / (n * (n - 1.0));
    if d_exp == 0.0 {
        // all labels identical: perfect agreement by convention
        return Ok(1.0);
    }
    Ok(1.0 - d_obs / d_exp)
}

// ---------------------------------------------------------------------------
// Agreement report
// ---------------------------------------------------------------------------

/// Per-author slice of an [`AgreementReport`].
#[derive(Debug, Clone, Serialize)]
pub struct AuthorAgreement {
    pub alpha_sentence: f64,
    pub alpha_story_mean: f64,
    pub alpha_story_std: f64,
    pub stories: usize,
}

/// Sentence- and story-level alpha for a set of annotators, overall and
/// broken down by author. `alpha_story_std` is the population (1/n) standard
/// deviation of the per-story values.
#[derive(Debug, Clone, Serialize)]
pub struct AgreementReport {
    pub alpha_sentence: f64,
    pub alpha_story_mean: f64,
    pub alpha_story_std: f64,
    pub per_story: BTreeMap<StoryId, f64>,
    pub per_author: BTreeMap<Author, AuthorAgreement>,
    pub annotator_set: Vec<AnnotatorId>,
}

fn label_units(stories: &[&Story], annotators: &[AnnotatorId]) -> Result<Vec<Vec<EmotionLabel>>> {
    let mut units = Vec::new();
    for story in stories {
        for sentence in &story.sentences {
            let mut unit = Vec::with_capacity(annotators.len());
            for a in annotators {
                let label = sentence.labels.get(a).ok_or_else(|| Error::MissingLabel {
                    story: story.story_id.to_string(),
                    annotator: a.0,
                    index: sentence.index,
                })?;
                unit.push(*label);
            }
            units.push(unit);
        }
    }
    Ok(units)
}

pub(crate) fn population_std(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Sentence-level alpha over the pooled sentences, per-story alphas with
/// their mean and spread, and the same trio per author. Labels are pooled
/// across schemes into one nominal space.
pub fn alpha_report(stories: &[Story], annotators: &[AnnotatorId]) -> Result<AgreementReport> {
    if annotators.len() < 2 {
        return Err(Error::InvalidValue {
            what: "annotator set",
            msg: "agreement needs at least two annotators".into(),
        });
    }
    let all: Vec<&Story> = stories.iter().collect();
    let alpha_sentence = krippendorff_alpha(&label_units(&all, annotators)?)?;

    let mut per_story = BTreeMap::new();
    for story in stories {
        let alpha = krippendorff_alpha(&label_units(&[story], annotators)?)?;
        per_story.insert(story.story_id.clone(), alpha);
    }
    let story_alphas: Vec<f64> = per_story.values().copied().collect();
    let alpha_story_mean = mean(&story_alphas);
    let alpha_story_std = population_std(&story_alphas);

    let mut per_author = BTreeMap::new();
    for author in Author::ALL {
        let subset: Vec<&Story> = stories.iter().filter(|s| s.author == author).collect();
        if subset.is_empty() {
            continue;
        }
        let sent = krippendorff_alpha(&label_units(&subset, annotators)?)?;
        let alphas: Vec<f64> = subset.iter().map(|s| per_story[&s.story_id]).collect();
        per_author.insert(
            author,
            AuthorAgreement {
                alpha_sentence: sent,
                alpha_story_mean: mean(&alphas),
                alpha_story_std: population_std(&alphas),
                stories: subset.len(),
            },
        );
    }

    Ok(AgreementReport {
        alpha_sentence,
        alpha_story_mean,
        alpha_story_std,
        per_story,
        per_author,
        annotator_set: annotators.to_vec(),
    })
}

// ---------------------------------------------------------------------------
// Confusion matrix
// ---------------------------------------------------------------------------

/// Label-by-label counts for two annotators over co-annotated sentences.
/// Rows use the first annotator's scheme, columns the second's.
#[derive(Debug, Clone, Serialize)]
pub struct ConfusionMatrix {
    pub labels_row: Vec<EmotionLabel>,
    pub labels_col: Vec<EmotionLabel>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// CSV rendering: header row of column labels, then one row per row label.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("label");
        for c in &self.labels_col {
            out.push(',');
            out.push_str(c.as_str());
        }
        out.push('\n');
        for (r, row) in self.labels_row.iter().zip(&self.counts) {
            out.push_str(r.as_str());
            for v in row {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Count co-annotated sentences: `counts[i][j]` = sentences labeled
/// `labels_row[i]` by `a` and `labels_col[j]` by `b`. Sentences missing
/// either annotator are skipped.
pub fn confusion(stories: &[Story], a: AnnotatorId, b: AnnotatorId) -> ConfusionMatrix {
    let labels_row = a.scheme();
    let labels_col = b.scheme();
    let mut counts = vec![vec![0u64; labels_col.len()]; labels_row.len()];
    for story in stories {
        for sentence in &story.sentences {
            let (Some(la), Some(lb)) = (sentence.labels.get(&a), sentence.labels.get(&b)) else {
                continue;
            };
            let i = labels_row.iter().position(|l| l == la).expect("scheme");
            let j = labels_col.iter().position(|l| l == lb).expect("scheme");
            counts[i][j] += 1;
        }
    }
    ConfusionMatrix {
        labels_row,
        labels_col,
        counts,
    }
}

// ---------------------------------------------------------------------------
// Absolute-error statistics
// ---------------------------------------------------------------------------

/// Mean/std (population) and nearest-rank percentiles of absolute errors.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorStats {
    pub mean: f64,
    pub std: f64,
    pub median: f64,
    pub p90: f64,
    pub p95: f64,
    pub n: usize,
}

/// Nearest-rank percentile: the ceil(p·n)-th order statistic of the sorted
/// sample (1-indexed).
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = (p * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Summarize a sequence of absolute errors. Input values must be >= 0.
pub fn error_stats(abs_errors: &[f64]) -> Result<ErrorStats> {
    if abs_errors.is_empty() {
        return Err(Error::EmptyInput("error_stats needs at least one value"));
    }
    if let Some(bad) = abs_errors.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::InvalidValue {
            what: "absolute error",
            msg: format!("{bad} is negative or non-finite"),
        });
    }
    let mut sorted = abs_errors.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(ErrorStats {
        mean: mean(abs_errors),
        std: population_std(abs_errors),
        median: nearest_rank(&sorted, 0.50),
        p90: nearest_rank(&sorted, 0.90),
        p95: nearest_rank(&sorted, 0.95),
        n: abs_errors.len(),
    })
}
