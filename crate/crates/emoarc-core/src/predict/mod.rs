//! Per-sentence VA prediction: context-window construction, a lexicon
//! baseline, a hashed-feature linear model, and an adapter for externally
//! produced prediction files.
//!
//! All predictors emit one VA point per sentence with values in [0, 1]
//! (sigmoid or anchor-bounded), the contract the evaluation side relies on.

mod external;
mod lexicon;
mod linear;

pub use external::{load_external_predictions, PredictionSet};
pub use lexicon::{lexicon_predict, lexicon_predict_texts};
pub use linear::{
    predict_linear, predict_linear_texts, ridge_solve, sentence_features, train_linear,
    train_linear_anchored, FeatureConfig, LinearModel, SentenceFeatures, HASHED_DIM,
};

use serde::{Deserialize, Serialize};

use crate::corpus::{Story, StoryId};

/// Context-window parameters: up to `context_size` sentences on each side of
/// the center, a token budget, and the separator placed between sentences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub context_size: usize,
    pub max_tokens: usize,
    pub separator: String,
}

impl WindowSpec {
    pub fn new(context_size: usize, max_tokens: usize) -> WindowSpec {
        WindowSpec {
            context_size,
            max_tokens,
            separator: "[SEP]".to_string(),
        }
    }
}

impl Default for WindowSpec {
    fn default() -> WindowSpec {
        WindowSpec::new(2, 512)
    }
}

/// One rendered context window, centered on a sentence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContextInput {
    pub story_id: StoryId,
    pub center_index: usize,
    /// inclusive sentence range actually included
    pub lo: usize,
    pub hi: usize,
    /// the largest context size that fit the token budget
    pub effective_c: usize,
    pub rendered: String,
    /// set when even the lone center sentence exceeds the budget; the
    /// sentence is kept whole
    pub oversize: bool,
}

/// Whitespace token count scaled by 1.3 (rounded up), a rough subword proxy.
pub fn default_token_count(text: &str) -> usize {
    (text.split_whitespace().count() as f64 * 1.3).ceil() as usize
}

fn render_window(texts: &[&str], lo: usize, hi: usize, separator: &str) -> String {
    let mut out = String::new();
    for (k, text) in texts[lo..=hi].iter().enumerate() {
        if k > 0 {
            out.push(' ');
            out.push_str(separator);
            out.push(' ');
        }
        out.push_str(text);
    }
    out
}

/// Build one window per sentence. Each window uses the largest context size
/// `c <= spec.context_size` whose rendering fits `spec.max_tokens` under the
/// supplied counter; when even `c = 0` does not fit, the single sentence is
/// kept whole and flagged oversize.
pub fn build_windows<F: Fn(&str) -> usize>(
    story: &Story,
    spec: &WindowSpec,
    token_counter: F,
) -> Vec<ContextInput> {
    windows_for_texts(&story.story_id, &story.texts(), spec, token_counter)
}

pub fn windows_for_texts<F: Fn(&str) -> usize>(
    story_id: &StoryId,
    texts: &[&str],
    spec: &WindowSpec,
    token_counter: F,
) -> Vec<ContextInput> {
    let n = texts.len();
    let mut out = Vec::with_capacity(n);
    for center in 0..n {
        let mut chosen = None;
        for c in (0..=spec.context_size).rev() {
            let lo = center.saturating_sub(c);
            let hi = (center + c).min(n.saturating_sub(1));
            let rendered = render_window(texts, lo, hi, &spec.separator);
            if token_counter(&rendered) <= spec.max_tokens {
                chosen = Some((c, lo, hi, rendered, false));
                break;
            }
        }
        let (effective_c, lo, hi, rendered, oversize) = chosen.unwrap_or_else(|| {
            (
                0,
                center,
                center,
                texts[center].to_string(),
                true,
            )
        });
        out.push(ContextInput {
            story_id: story_id.clone(),
            center_index: center,
            lo,
            hi,
            effective_c,
            rendered,
            oversize,
        });
    }
    out
}
