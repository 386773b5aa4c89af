//! Evaluator-Weighted-Estimator fusion of annotator signals into a per-story
//! continuous gold standard.
//!
//! Weight definition (selectable): per dimension, an annotator's raw weight
//! is its CCC (or Pearson) against the leave-one-out mean (or plain mean) of
//! the signals, clipped at zero. If every raw weight is zero or undefined,
//! uniform weights apply and the fallback is recorded. Fusion always runs
//! per story and per dimension, never across concatenated stories.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotatorId, Story, StoryId};
use crate::error::{Error, Result};
use crate::mapping::{build_annotator_signal, LabelMap};
use crate::metrics::{ccc, pearson};

/// Origin of a trajectory signal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SignalSource {
    Annotator(AnnotatorId),
    Gold,
    Prediction(String),
}

impl fmt::Display for SignalSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SignalSource::Annotator(a) => write!(f, "{a}"),
            SignalSource::Gold => write!(f, "gold"),
            SignalSource::Prediction(run) => write!(f, "prediction:{run}"),
        }
    }
}

/// A per-story sequence of VA points from one source; both dimensions have
/// the story's length and every value lies in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySignal {
    pub story_id: StoryId,
    pub source: SignalSource,
    pub valence: Vec<f64>,
    pub arousal: Vec<f64>,
}

impl TrajectorySignal {
    pub fn new(
        story_id: StoryId,
        source: SignalSource,
        valence: Vec<f64>,
        arousal: Vec<f64>,
    ) -> Result<TrajectorySignal> {
        if valence.len() != arousal.len() {
            return Err(Error::LengthMismatch {
                left: valence.len(),
                right: arousal.len(),
            });
        }
        if valence.is_empty() {
            return Err(Error::EmptyInput("trajectory signal has no points"));
        }
        for v in valence.iter().chain(arousal.iter()) {
            if !(0.0..=1.0).contains(v) || !v.is_finite() {
                return Err(Error::InvalidValue {
                    what: "signal value",
                    msg: format!("{v} outside [0, 1]"),
                });
            }
        }
        Ok(TrajectorySignal {
            story_id,
            source,
            valence,
            arousal,
        })
    }

    pub fn len(&self) -> usize {
        self.valence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.valence.is_empty()
    }

    pub fn dimension(&self, d: Dimension) -> &[f64] {
        match d {
            Dimension::Valence => &self.valence,
            Dimension::Arousal => &self.arousal,
        }
    }
}

/// The two affect dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Valence,
    Arousal,
}

impl Dimension {
    pub const BOTH: [Dimension; 2] = [Dimension::Valence, Dimension::Arousal];

    pub fn as_str(&self) -> &'static str {
        match self {
            Dimension::Valence => "valence",
            Dimension::Arousal => "arousal",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which correlation the annotator weights use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMetric {
    Ccc,
    Pearson,
}

impl FromStr for WeightMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ccc" => Ok(WeightMetric::Ccc),
            "pearson" => Ok(WeightMetric::Pearson),
            _ => Err(Error::InvalidValue {
                what: "ewe weight metric",
                msg: format!("expected 'ccc' or 'pearson', got '{s}'"),
            }),
        }
    }
}

/// The reference each annotator is correlated against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightReference {
    /// mean of the other annotators' signals
    Loo,
    /// mean of all signals including the annotator's own
    Mean,
}

impl FromStr for WeightReference {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "loo" => Ok(WeightReference::Loo),
            "mean" => Ok(WeightReference::Mean),
            _ => Err(Error::InvalidValue {
                what: "ewe reference",
                msg: format!("expected 'loo' or 'mean', got '{s}'"),
            }),
        }
    }
}

/// Fusion variant; the default is CCC against the leave-one-out mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EweConfig {
    pub metric: WeightMetric,
    pub reference: WeightReference,
}

impl Default for EweConfig {
    fn default() -> EweConfig {
        EweConfig {
            metric: WeightMetric::Ccc,
            reference: WeightReference::Loo,
        }
    }
}

/// Normalized fusion weights per input signal (by source), per dimension.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FusionWeights {
    pub per_annotator: Vec<AnnotatorWeight>,
    /// true when either dimension fell back to uniform weights
    pub fallback_used: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnotatorWeight {
    pub source: SignalSource,
    pub weight_v: f64,
    pub weight_a: f64,
}

fn pointwise_mean(columns: &[&[f64]], skip: Option<usize>) -> Vec<f64> {
    let len = columns[0].len();
    let used: Vec<&&[f64]> = columns
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != skip)
        .map(|(_, c)| c)
        .collect();
    (0..len)
        .map(|i| used.iter().map(|c| c[i]).sum::<f64>() / used.len() as f64)
        .collect()
}

/// Raw (clipped) weights for one dimension; `None` means every weight was
/// zero or undefined and uniform fallback applies.
fn dimension_weights(signals: &[&[f64]], cfg: &EweConfig) -> Option<Vec<f64>> {
    let k = signals.len();
    let mut raw = vec![0.0; k];
    let mut sum = 0.0;
    for i in 0..k {
        let reference = match cfg.reference {
            WeightReference::Loo => pointwise_mean(signals, Some(i)),
            WeightReference::Mean => pointwise_mean(signals, None),
        };
        let value = match cfg.metric {
            WeightMetric::Ccc => ccc(signals[i], &reference),
            WeightMetric::Pearson => pearson(signals[i], &reference),
        };
        let w = value.unwrap_or(0.0).max(0.0);
        raw[i] = w;
        sum += w;
    }
    if sum <= 0.0 {
        return None;
    }
    raw.iter_mut().for_each(|w| *w /= sum);
    Some(raw)
}

/// Fuse two or more equal-length signals for one story into a gold signal.
/// The output is a pointwise convex combination, so it stays within the
/// input envelope and in [0, 1].
pub fn ewe_fuse(
    signals: &[TrajectorySignal],
    cfg: &EweConfig,
) -> Result<(TrajectorySignal, FusionWeights)> {
    if signals.len() < 2 {
        return Err(Error::TooShort {
            min: 2,
            got: signals.len(),
        });
    }
    let story_id = signals[0].story_id.clone();
    let len = signals[0].len();
    for s in signals {
        if s.story_id != story_id {
            return Err(Error::InvalidValue {
                what: "fusion input",
                msg: format!("mixed story ids '{}' and '{}'", story_id, s.story_id),
            });
        }
        if s.len() != len {
            return Err(Error::LengthMismatch {
                left: len,
                right: s.len(),
            });
        }
    }

    let mut fused: BTreeMap<Dimension, Vec<f64>> = BTreeMap::new();
    let mut weights: BTreeMap<Dimension, Vec<f64>> = BTreeMap::new();
    let mut fallback_used = false;
    for d in Dimension::BOTH {
        let columns: Vec<&[f64]> = signals.iter().map(|s| s.dimension(d)).collect();
        let w = match dimension_weights(&columns, cfg) {
            Some(w) => w,
            None => {
                fallback_used = true;
                vec![1.0 / signals.len() as f64; signals.len()]
            }
        };
        let gold: Vec<f64> = (0..len)
            .map(|i| {
                columns
                    .iter()
                    .zip(&w)
                    .map(|(c, wk)| wk * c[i])
                    .sum::<f64>()
            })
            .collect();
        fused.insert(d, gold);
        weights.insert(d, w);
    }

    let per_annotator = signals
        .iter()
        .enumerate()
        .map(|(i, s)| AnnotatorWeight {
            source: s.source.clone(),
            weight_v: weights[&Dimension::Valence][i],
            weight_a: weights[&Dimension::Arousal][i],
        })
        .collect();
    let gold = TrajectorySignal::new(
        story_id,
        SignalSource::Gold,
        fused.remove(&Dimension::Valence).unwrap(),
        fused.remove(&Dimension::Arousal).unwrap(),
    )?;
    Ok((
        gold,
        FusionWeights {
            per_annotator,
            fallback_used,
        },
    ))
}

/// Gold signal plus the weights that produced it.
#[derive(Debug, Clone)]
pub struct FusedStory {
    pub gold: TrajectorySignal,
    pub weights: FusionWeights,
}

/// Build annotator signals from each story's labels and fuse them,
/// independently per story. Only annotators that labeled every sentence of
/// a story enter its fusion; at least two are required.
pub fn fuse_corpus(
    stories: &[Story],
    table: &LabelMap,
    cfg: &EweConfig,
) -> Result<BTreeMap<StoryId, FusedStory>> {
    let mut out = BTreeMap::new();
    for story in stories {
        let annotators = story.full_coverage_annotators();
        if annotators.len() < 2 {
            return Err(Error::InvalidValue {
                what: "fusion input",
                msg: format!(
                    "story '{}' has {} fully covering annotators, need 2",
                    story.story_id,
                    annotators.len()
                ),
            });
        }
        let signals: Vec<TrajectorySignal> = annotators
            .iter()
            .map(|&a| build_annotator_signal(story, a, table))
            .collect::<Result<_>>()?;
        let (gold, weights) = ewe_fuse(&signals, cfg)?;
        out.insert(story.story_id.clone(), FusedStory { gold, weights });
    }
    Ok(out)
}

/// Write signals as `story_id<TAB>index<TAB>valence<TAB>arousal` with
/// 6-decimal fixed formatting, stories in ascending id order.
pub fn export_signals<'a>(
    signals: impl IntoIterator<Item = &'a TrajectorySignal>,
    path: impl AsRef<Path>,
    run_id: Option<&str>,
) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, render_signals(signals, run_id)).map_err(|e| Error::io(path, e))
}

pub fn render_signals<'a>(
    signals: impl IntoIterator<Item = &'a TrajectorySignal>,
    run_id: Option<&str>,
) -> String {
    let mut rows: Vec<&TrajectorySignal> = signals.into_iter().collect();
    rows.sort_by(|a, b| a.story_id.cmp(&b.story_id));
    let mut out = String::new();
    if let Some(run_id) = run_id {
        out.push_str(&format!("# run_id={run_id}\n"));
    }
    for s in rows {
        for i in 0..s.len() {
            out.push_str(&format!(
                "{}\t{}\t{:.6}\t{:.6}\n",
                s.story_id, i, s.valence[i], s.arousal[i]
            ));
        }
    }
    out
}

/// Parse the signal TSV format; returns the optional `# run_id=` header and
/// one signal per story (rows must be contiguous per story, indices from 0).
pub fn parse_signals(
    content: &str,
    origin: &Path,
    source: SignalSource,
) -> Result<(Option<String>, BTreeMap<StoryId, TrajectorySignal>)> {
    let mut run_id = None;
    let mut per_story: BTreeMap<StoryId, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for (i, line) in content.lines().enumerate() {
        let lineno = i + 1;
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(id) = rest.strip_prefix("run_id=") {
                run_id = Some(id.trim().to_string());
            }
            continue;
        }
        if lineno == 1 && line.starts_with("story_id\t") {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(Error::parse(origin, lineno, "expected story_id<TAB>index<TAB>valence<TAB>arousal"));
        }
        let story = StoryId::new(fields[0]);
        let index: usize = fields[1]
            .parse()
            .map_err(|_| Error::parse(origin, lineno, format!("bad index '{}'", fields[1])))?;
        let v: f64 = fields[2]
            .parse()
            .map_err(|_| Error::parse(origin, lineno, format!("bad valence '{}'", fields[2])))?;
        let a: f64 = fields[3]
            .parse()
            .map_err(|_| Error::parse(origin, lineno, format!("bad arousal '{}'", fields[3])))?;
        if !(0.0..=1.0).contains(&v) || !(0.0..=1.0).contains(&a) {
            return Err(Error::InvalidValue {
                what: "signal value",
                msg: format!("{}:{lineno}: ({v}, {a}) outside [0, 1]", origin.display()),
            });
        }
        let entry = per_story.entry(story.clone()).or_default();
        if entry.0.len() != index {
            return Err(Error::parse(
                origin,
                lineno,
                format!("story '{story}': expected index {}, got {index}", entry.0.len()),
            ));
        }
        entry.0.push(v);
        entry.1.push(a);
    }
    let mut signals = BTreeMap::new();
    for (id, (valence, arousal)) in per_story {
        let signal = TrajectorySignal::new(id.clone(), source.clone(), valence, arousal)?;
        signals.insert(id, signal);
    }
    Ok((run_id, signals))
}

/// Load a gold-standard TSV.
pub fn load_gold(path: impl AsRef<Path>) -> Result<BTreeMap<StoryId, TrajectorySignal>> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (_, signals) = parse_signals(&content, path, SignalSource::Gold)?;
    Ok(signals)
}
