//! Adapter for externally produced per-sentence predictions (for example a
//! separately fine-tuned transformer), in the gold TSV format plus a
//! `# run_id=<id>` header line.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::corpus::{Story, StoryId};
use crate::error::{Error, Result};
use crate::fusion::{export_signals, parse_signals, SignalSource, TrajectorySignal};

/// A named set of prediction signals, one per covered story.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    pub run_id: String,
    pub signals: BTreeMap<StoryId, TrajectorySignal>,
}

impl PredictionSet {
    pub fn new(run_id: impl Into<String>) -> PredictionSet {
        PredictionSet {
            run_id: run_id.into(),
            signals: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, mut signal: TrajectorySignal) {
        signal.source = SignalSource::Prediction(self.run_id.clone());
        self.signals.insert(signal.story_id.clone(), signal);
    }

    /// Check that every listed story exists in the corpus and is fully
    /// covered, one VA point per sentence.
    pub fn validate_coverage<'a>(
        &self,
        story_lengths: impl IntoIterator<Item = (&'a StoryId, usize)>,
    ) -> Result<()> {
        let lengths: BTreeMap<&StoryId, usize> = story_lengths.into_iter().collect();
        for (id, signal) in &self.signals {
            let Some(&len) = lengths.get(id) else {
                return Err(Error::UnknownStory {
                    story: id.to_string(),
                });
            };
            if signal.len() != len {
                return Err(Error::CoverageGap {
                    story: id.to_string(),
                    index: signal.len().min(len),
                });
            }
        }
        Ok(())
    }

    /// Coverage check for a full corpus: every story present and covered.
    pub fn validate_full(&self, stories: &[Story]) -> Result<()> {
        for story in stories {
            let Some(signal) = self.signals.get(&story.story_id) else {
                return Err(Error::CoverageGap {
                    story: story.story_id.to_string(),
                    index: 0,
                });
            };
            if signal.len() != story.len() {
                return Err(Error::CoverageGap {
                    story: story.story_id.to_string(),
                    index: signal.len().min(story.len()),
                });
            }
        }
        self.validate_coverage(stories.iter().map(|s| (&s.story_id, s.len())))
    }

    pub fn export(&self, path: impl AsRef<Path>) -> Result<()> {
        export_signals(self.signals.values(), path, Some(&self.run_id))
    }
}

/// Load predictions and validate full coverage of the given corpus. Values
/// outside [0, 1], unknown stories, and per-story gaps are errors naming the
/// offender.
pub fn load_external_predictions(
    path: impl AsRef<Path>,
    stories: &[Story],
) -> Result<PredictionSet> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (run_id, raw) = parse_signals(
        &content,
        path,
        SignalSource::Prediction("external".to_string()),
    )?;
    let run_id = run_id.unwrap_or_else(|| "external".to_string());
    let mut set = PredictionSet::new(run_id);
    for (_, signal) in raw {
        set.insert(signal);
    }
    set.validate_full(stories)?;
    Ok(set)
}
