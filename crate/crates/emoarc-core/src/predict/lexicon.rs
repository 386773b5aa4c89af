//! Lexicon baseline: per-sentence lexicon means with optional exponential
//! smoothing across the story.

use crate::corpus::{Story, StoryId};
use crate::error::Result;
use crate::fusion::{SignalSource, TrajectorySignal};
use crate::mapping::{VadLexicon, NEUTRAL_ANCHOR};

/// Lowercase alphabetic tokens of a sentence.
pub(crate) fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphabetic())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

/// Mean lexicon value over the matched tokens of `text`; the neutral anchor
/// when nothing matches.
pub(crate) fn lexicon_mean(text: &str, lexicon: &VadLexicon) -> (f64, f64) {
    let mut sum_v = 0.0;
    let mut sum_a = 0.0;
    let mut hits = 0usize;
    for token in tokens(text) {
        if let Some(p) = lexicon.get(&token) {
            sum_v += p.valence;
            sum_a += p.arousal;
            hits += 1;
        }
    }
    if hits == 0 {
        (NEUTRAL_ANCHOR.valence, NEUTRAL_ANCHOR.arousal)
    } else {
        (sum_v / hits as f64, sum_a / hits as f64)
    }
}

/// Predict a trajectory from lexicon means, then smooth exponentially with
/// half-life `half_life` (0 disables smoothing): with decay
/// `d = 0.5^(1/h)`, `out[i] = (1 − d)·raw[i] + d·out[i−1]`.
pub fn lexicon_predict(story: &Story, lexicon: &VadLexicon, half_life: f64) -> Result<TrajectorySignal> {
    lexicon_predict_texts(&story.story_id, &story.texts(), lexicon, half_life)
}

pub fn lexicon_predict_texts(
    story_id: &StoryId,
    texts: &[&str],
    lexicon: &VadLexicon,
    half_life: f64,
) -> Result<TrajectorySignal> {
    let raw: Vec<(f64, f64)> = texts.iter().map(|t| lexicon_mean(t, lexicon)).collect();
    let decay = if half_life > 0.0 {
        0.5_f64.powf(1.0 / half_life)
    } else {
        0.0
    };
    let mut valence = Vec::with_capacity(raw.len());
    let mut arousal = Vec::with_capacity(raw.len());
    for (i, (v, a)) in raw.iter().enumerate() {
        if i == 0 || decay == 0.0 {
            valence.push(*v);
            arousal.push(*a);
        } else {
            valence.push((1.0 - decay) * v + decay * valence[i - 1]);
            arousal.push((1.0 - decay) * a + decay * arousal[i - 1]);
        }
    }
    TrajectorySignal::new(
        story_id.clone(),
        SignalSource::Prediction(format!("lexicon:h={half_life}")),
        valence,
        arousal,
    )
}
