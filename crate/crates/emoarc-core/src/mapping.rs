//! Discrete labels and free text tokens mapped into valence/arousal space.
//!
//! The default label table lives in `resources/label_map.tsv` (data, not
//! code) so alternative mappings can be swapped in via the same TSV format.
//! Its 3-decimal values are canonical downstream.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{AnnotatorId, EmotionLabel, Story, StoryId};
use crate::error::{Error, Result};
use crate::fusion::{SignalSource, TrajectorySignal};
use crate::metrics::pearson;

/// A point in valence/arousal space; both coordinates in [0, 1].
/// Construction outside the range is an error, never a silent clamp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VAPoint {
    pub valence: f64,
    pub arousal: f64,
}

impl VAPoint {
    pub fn new(valence: f64, arousal: f64) -> Result<VAPoint> {
        for (name, v) in [("valence", valence), ("arousal", arousal)] {
            if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                return Err(Error::InvalidValue {
                    what: "VA coordinate",
                    msg: format!("{name} {v} outside [0, 1]"),
                });
            }
        }
        Ok(VAPoint { valence, arousal })
    }
}

/// The sentence-level fallback when nothing else applies: the neutral label's
/// table entry.
pub const NEUTRAL_ANCHOR: VAPoint = VAPoint {
    valence: 0.469,
    arousal: 0.184,
};

const DEFAULT_TABLE_TSV: &str = include_str!("../resources/label_map.tsv");

/// Total mapping from the eight labels to VA points.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMap {
    entries: BTreeMap<EmotionLabel, VAPoint>,
}

impl LabelMap {
    /// Parse the `label<TAB>valence<TAB>arousal` format. `#` comments and an
    /// optional header row are skipped; all eight labels must be present
    /// exactly once.
    pub fn from_tsv(content: &str, origin: &Path) -> Result<LabelMap> {
        let mut entries = BTreeMap::new();
        for (i, line) in content.lines().enumerate() {
            let lineno = i + 1;
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') || line.starts_with("label\t") {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::parse(origin, lineno, "expected label<TAB>valence<TAB>arousal"));
            }
            let label: EmotionLabel = fields[0]
                .parse()
                .map_err(|_| Error::parse(origin, lineno, format!("unknown label '{}'", fields[0])))?;
            let v: f64 = fields[1]
                .parse()
                .map_err(|_| Error::parse(origin, lineno, format!("bad valence '{}'", fields[1])))?;
            let a: f64 = fields[2]
                .parse()
                .map_err(|_| Error::parse(origin, lineno, format!("bad arousal '{}'", fields[2])))?;
            if entries.insert(label, VAPoint::new(v, a)?).is_some() {
                return Err(Error::parse(origin, lineno, format!("label '{label}' listed twice")));
            }
        }
        if entries.len() != EmotionLabel::ALL.len() {
            return Err(Error::InvalidValue {
                what: "label map",
                msg: format!("expected {} labels, got {}", EmotionLabel::ALL.len(), entries.len()),
            });
        }
        Ok(LabelMap { entries })
    }

    pub fn from_tsv_path(path: impl AsRef<Path>) -> Result<LabelMap> {
        let path = path.as_ref();
        let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        LabelMap::from_tsv(&content, path)
    }

    pub fn get(&self, label: EmotionLabel) -> VAPoint {
        self.entries[&label]
    }

    /// Canonical 3-decimal rendering, the basis of the golden digest.
    pub fn canonical_tsv(&self) -> String {
        let mut out = String::new();
        for (label, p) in &self.entries {
            out.push_str(&format!("{label}\t{:.3}\t{:.3}\n", p.valence, p.arousal));
        }
        out
    }

    /// SHA-256 over the canonical rendering.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.canonical_tsv().as_bytes());
        hex_string(&hasher.finalize())
    }
}

impl Default for LabelMap {
    fn default() -> LabelMap {
        LabelMap::from_tsv(DEFAULT_TABLE_TSV, Path::new("resources/label_map.tsv"))
            .expect("embedded label table is well-formed")
    }
}

pub(crate) fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Exact, total table lookup.
pub fn map_label(label: EmotionLabel, table: &LabelMap) -> VAPoint {
    table.get(label)
}

/// Per-sentence VA signal for one annotator: `signal[i]` is the table value
/// of the annotator's label at sentence `i`. Errors if any sentence lacks a
/// label from this annotator.
pub fn build_annotator_signal(
    story: &Story,
    annotator: AnnotatorId,
    table: &LabelMap,
) -> Result<TrajectorySignal> {
    let mut valence = Vec::with_capacity(story.len());
    let mut arousal = Vec::with_capacity(story.len());
    for sentence in &story.sentences {
        let label = sentence
            .labels
            .get(&annotator)
            .ok_or_else(|| Error::MissingLabel {
                story: story.story_id.to_string(),
                annotator: annotator.0,
                index: sentence.index,
            })?;
        let p = map_label(*label, table);
        valence.push(p.valence);
        arousal.push(p.arousal);
    }
    TrajectorySignal::new(
        story.story_id.clone(),
        SignalSource::Annotator(annotator),
        valence,
        arousal,
    )
}

/// A VAD-style lexicon: lowercase token → VA point.
#[derive(Debug, Clone)]
pub struct VadLexicon {
    entries: HashMap<String, VAPoint>,
    pub source: String,
}

impl VadLexicon {
    pub fn empty(source: impl Into<String>) -> VadLexicon {
        VadLexicon {
            entries: HashMap::new(),
            source: source.into(),
        }
    }

    /// Exact-token lookup after lowercasing; no stemming.
    pub fn get(&self, token: &str) -> Option<VAPoint> {
        self.entries.get(&token.to_lowercase()).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    #[cfg(test)]
    pub(crate) fn insert_for_test(&mut self, token: &str, point: VAPoint) {
        self.entries.insert(token.to_lowercase(), point);
    }
}

/// Result of a lexicon load: the lexicon plus row-level bookkeeping.
#[derive(Debug)]
pub struct LexiconLoad {
    pub lexicon: VadLexicon,
    /// rows whose token was already present; last value wins
    pub duplicate_warnings: usize,
    /// multi-word rows skipped (out of scope)
    pub skipped_multiword: usize,
}

/// Load a `term<TAB>valence<TAB>arousal[<TAB>dominance]` lexicon. The header
/// row is optional and auto-detected; the dominance column is parsed and
/// ignored. Duplicate tokens: last value wins, counted as a warning.
pub fn load_lexicon(path: impl AsRef<Path>) -> Result<LexiconLoad> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_lexicon(&content, path)
}

fn parse_lexicon(content: &str, origin: &Path) -> Result<LexiconLoad> {
    let mut lexicon = VadLexicon::empty(origin.display().to_string());
    let mut duplicate_warnings = 0;
    let mut skipped_multiword = 0;
    for (i, line) in content.lines().enumerate() {
        let lineno = i + 1;
        let line = line.trim_end_matches('\r');
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 && fields.len() != 4 {
            return Err(Error::parse(origin, lineno, "expected 3 or 4 tab-separated columns"));
        }
        if lineno == 1 && fields[1].parse::<f64>().is_err() {
            // header row
            continue;
        }
        let term = fields[0].trim().to_lowercase();
        if term.is_empty() {
            return Err(Error::parse(origin, lineno, "empty term"));
        }
        if term.contains(char::is_whitespace) {
            skipped_multiword += 1;
            continue;
        }
        let v: f64 = fields[1]
            .parse()
            .map_err(|_| Error::parse(origin, lineno, format!("bad valence '{}'", fields[1])))?;
        let a: f64 = fields[2]
            .parse()
            .map_err(|_| Error::parse(origin, lineno, format!("bad arousal '{}'", fields[2])))?;
        if let Some(d) = fields.get(3) {
            let _: f64 = d
                .parse()
                .map_err(|_| Error::parse(origin, lineno, format!("bad dominance '{d}'")))?;
        }
        let point = VAPoint::new(v, a).map_err(|e| Error::parse(origin, lineno, e.to_string()))?;
        if lexicon.entries.insert(term, point).is_some() {
            duplicate_warnings += 1;
        }
    }
    Ok(LexiconLoad {
        lexicon,
        duplicate_warnings,
        skipped_multiword,
    })
}

/// Pearson correlation per dimension between a directly annotated signal and
/// a mapped one. Both must be non-constant and of equal length ≥ 2.
pub fn validate_mapping(
    direct: &TrajectorySignal,
    mapped: &TrajectorySignal,
) -> Result<(f64, f64)> {
    let pearson_v = pearson(&direct.valence, &mapped.valence)?;
    let pearson_a = pearson(&direct.arousal, &mapped.arousal)?;
    Ok((pearson_v, pearson_a))
}

/// Convenience used by signals and tests.
pub fn signal_from_labels(
    story_id: &StoryId,
    labels: &[EmotionLabel],
    table: &LabelMap,
    source: SignalSource,
) -> TrajectorySignal {
    let (valence, arousal): (Vec<f64>, Vec<f64>) = labels
        .iter()
        .map(|&l| {
            let p = table.get(l);
            (p.valence, p.arousal)
        })
        .unzip();
    TrajectorySignal::new(story_id.clone(), source, valence, arousal)
        .expect("table values are in range")
}
