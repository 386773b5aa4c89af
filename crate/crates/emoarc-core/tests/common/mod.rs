//! Shared test support: a deterministic synthetic corpus whose gold standard
//! is a known function of lexicon features, plus optional annotator noise.
//!
//! Each emotion label owns a disjoint pool of alphabetic words; every word
//! carries its label's table VA value in the generated lexicon. Sentences
//! draw words from their true label's pool, so the per-sentence lexicon mean
//! equals the label's VA point exactly. Annotators 2 and 3 disagree with the
//! true label with the configured probability.

use std::fmt::Write as _;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use emoarc_core::corpus::EmotionLabel;
use emoarc_core::mapping::LabelMap;

pub struct SynthCorpus {
    pub labeled_tsv: String,
    pub lexicon_tsv: String,
    pub unlabeled_jsonl: String,
}

const AUTHORS: [&str; 3] = ["Grimm", "HCA", "Potter"];
const WORDS_PER_LABEL: usize = 40;

fn word(label_idx: usize, word_idx: usize) -> String {
    let a = char::from(b'a' + label_idx as u8);
    let b = char::from(b'a' + (word_idx / 26) as u8);
    let c = char::from(b'a' + (word_idx % 26) as u8);
    format!("w{a}{b}{c}")
}

fn label_at(idx: usize) -> EmotionLabel {
    EmotionLabel::ALL[idx]
}

fn reduced_version(label: EmotionLabel) -> EmotionLabel {
    match label {
        EmotionLabel::PositiveSurprise => EmotionLabel::Happiness,
        EmotionLabel::NegativeSurprise => EmotionLabel::Fear,
        other => other,
    }
}

fn sentence_text(rng: &mut StdRng, label_idx: usize) -> String {
    let n_words = rng.gen_range(4..=8);
    let words: Vec<String> = (0..n_words)
        .map(|_| word(label_idx, rng.gen_range(0..WORDS_PER_LABEL)))
        .collect();
    format!("{}.", words.join(" "))
}

/// Generate `n_stories` labeled stories, a matching lexicon, and an
/// unlabeled document set from the same vocabulary. `disagreement` is the
/// probability that annotators 2 and 3 flip to a random label.
pub fn synth_corpus(seed: u64, n_stories: usize, disagreement: f64) -> SynthCorpus {
    let mut rng = StdRng::seed_from_u64(seed);
    let table = LabelMap::default();

    let mut lexicon_tsv = String::from("term\tvalence\tarousal\tdominance\n");
    for (li, label) in EmotionLabel::ALL.iter().enumerate() {
        let p = table.get(*label);
        for wi in 0..WORDS_PER_LABEL {
            writeln!(
                lexicon_tsv,
                "{}\t{}\t{}\t0.5",
                word(li, wi),
                p.valence,
                p.arousal
            )
            .unwrap();
        }
    }

    let mut labeled_tsv =
        String::from("story_id\tauthor\tindex\ttext\tlabel_a1\tlabel_a2\tlabel_a3\n");
    for s in 0..n_stories {
        let story_id = format!("synth_{s:04}");
        let author = AUTHORS[s % AUTHORS.len()];
        let n_sentences = rng.gen_range(6..=12);
        // persistent label walk, like the smooth arcs of real stories
        let mut true_idx = rng.gen_range(0..EmotionLabel::ALL.len());
        for index in 0..n_sentences {
            if index > 0 && rng.gen_bool(0.35) {
                true_idx = rng.gen_range(0..EmotionLabel::ALL.len());
            }
            let a1 = label_at(true_idx);
            let a2 = if rng.gen_bool(disagreement) {
                label_at(rng.gen_range(0..EmotionLabel::ALL.len()))
            } else {
                a1
            };
            let a3 = if rng.gen_bool(disagreement) {
                EmotionLabel::REDUCED[rng.gen_range(0..EmotionLabel::REDUCED.len())]
            } else {
                reduced_version(a1)
            };
            writeln!(
                labeled_tsv,
                "{story_id}\t{author}\t{index}\t{}\t{}\t{}\t{}",
                sentence_text(&mut rng, true_idx),
                a1.as_str(),
                a2.as_str(),
                a3.as_str()
            )
            .unwrap();
        }
    }

    let mut unlabeled_jsonl = String::new();
    let n_docs = (n_stories / 2).max(4);
    for d in 0..n_docs {
        let doc_id = format!("gb_{d:04}");
        let n_sentences = rng.gen_range(5..=9);
        for index in 0..n_sentences {
            let label_idx = rng.gen_range(0..EmotionLabel::ALL.len());
            writeln!(
                unlabeled_jsonl,
                r#"{{"doc_id":"{doc_id}","index":{index},"text":"{}"}}"#,
                sentence_text(&mut rng, label_idx)
            )
            .unwrap();
        }
    }

    SynthCorpus {
        labeled_tsv,
        lexicon_tsv,
        unlabeled_jsonl,
    }
}

/// Write the corpus into a directory; returns (labeled, lexicon, unlabeled)
/// paths.
pub fn write_corpus(
    dir: &std::path::Path,
    corpus: &SynthCorpus,
) -> (std::path::PathBuf, std::path::PathBuf, std::path::PathBuf) {
    let labeled = dir.join("alm.tsv");
    let lexicon = dir.join("vad.tsv");
    let unlabeled = dir.join("gb.jsonl");
    std::fs::write(&labeled, &corpus.labeled_tsv).unwrap();
    std::fs::write(&lexicon, &corpus.lexicon_tsv).unwrap();
    std::fs::write(&unlabeled, &corpus.unlabeled_jsonl).unwrap();
    (labeled, lexicon, unlabeled)
}
