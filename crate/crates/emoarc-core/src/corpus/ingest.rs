//! File ingestion and export for labeled and unlabeled corpora.
//!
//! Labeled corpus: UTF-8 TSV, one sentence per row,
//! `story_id<TAB>author<TAB>index<TAB>text<TAB>label_a1<TAB>label_a2<TAB>label_a3`,
//! with `label_a3` possibly empty. A header row is optional and detected by
//! its first column being `story_id`.
//!
//! Unlabeled corpus: UTF-8 JSON Lines, one object per sentence:
//! `{"doc_id": ..., "index": ..., "text": ...}`; or raw text run through
//! [`split_sentences`](super::split_sentences).

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    split_sentences, AnnotatedSentence, AnnotatorId, Author, EmotionLabel, Story, StoryId,
    UnlabeledCorpus, UnlabeledDoc,
};
use crate::error::{Error, Result};

const HEADER: &str = "story_id\tauthor\tindex\ttext\tlabel_a1\tlabel_a2\tlabel_a3";

struct Row {
    author: Author,
    sentence: AnnotatedSentence,
}

fn parse_row(path: &Path, lineno: usize, line: &str) -> Result<Row> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 7 {
        return Err(Error::parse(
            path,
            lineno,
            format!("expected 7 tab-separated columns, got {}", fields.len()),
        ));
    }
    let story_id = StoryId::new(fields[0]);
    if story_id.as_str().is_empty() {
        return Err(Error::parse(path, lineno, "empty story_id"));
    }
    let author = Author::parse(fields[1]);
    let index: usize = fields[2]
        .parse()
        .map_err(|_| Error::parse(path, lineno, format!("bad index '{}'", fields[2])))?;
    let text = fields[3].to_string();
    let mut labels = BTreeMap::new();
    for (slot, field) in fields[4..7].iter().enumerate() {
        let annotator = AnnotatorId(slot as u8 + 1);
        if field.is_empty() {
            continue;
        }
        let label: EmotionLabel = field
            .parse()
            .map_err(|_| Error::parse(path, lineno, format!("unknown label token '{field}'")))?;
        if !annotator.allows(label) {
            return Err(Error::SchemeViolation {
                annotator: annotator.0,
                label: label.to_string(),
            });
        }
        labels.insert(annotator, label);
    }
    if labels.len() < 2 {
        return Err(Error::parse(
            path,
            lineno,
            "a labeled sentence needs at least two annotator labels",
        ));
    }
    Ok(Row {
        author,
        sentence: AnnotatedSentence {
            story_id,
            index,
            text,
            labels,
        },
    })
}

/// Read a labeled corpus. Stories come back sorted by story id with
/// sentences ordered by index.
pub fn ingest_labeled(path: impl AsRef<Path>) -> Result<Vec<Story>> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut per_story: BTreeMap<StoryId, (Author, BTreeMap<usize, AnnotatedSentence>)> =
        BTreeMap::new();
    for (i, line) in content.lines().enumerate() {
        let lineno = i + 1;
        if line.is_empty() || (lineno == 1 && line.starts_with("story_id\t")) {
            continue;
        }
        let row = parse_row(path, lineno, line)?;
        let id = row.sentence.story_id.clone();
        let entry = per_story
            .entry(id.clone())
            .or_insert_with(|| (row.author, BTreeMap::new()));
        if entry.0 != row.author {
            return Err(Error::parse(
                path,
                lineno,
                format!("story '{id}' listed with two authors"),
            ));
        }
        let index = row.sentence.index;
        if entry.1.insert(index, row.sentence).is_some() {
            return Err(Error::DuplicateSentence {
                story: id.to_string(),
                index,
            });
        }
    }
    let mut stories = Vec::with_capacity(per_story.len());
    for (id, (author, sentences)) in per_story {
        let sentences: Vec<AnnotatedSentence> = sentences.into_values().collect();
        stories.push(Story::new(id, author, sentences)?);
    }
    Ok(stories)
}

/// Write a labeled corpus in the canonical TSV layout (with header).
pub fn export_labeled(stories: &[Story], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from(HEADER);
    out.push('\n');
    for story in stories {
        for s in &story.sentences {
            let label = |a: u8| {
                s.labels
                    .get(&AnnotatorId(a))
                    .map(|l| l.as_str())
                    .unwrap_or("")
            };
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                story.story_id,
                story.author,
                s.index,
                s.text,
                label(1),
                label(2),
                label(3)
            ));
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[derive(Serialize, Deserialize)]
struct JsonlSentence {
    doc_id: String,
    index: usize,
    text: String,
}

/// Read an unlabeled corpus from JSON Lines. Documents keep their order of
/// first appearance; sentence indices must be contiguous from 0 per document.
pub fn ingest_unlabeled_jsonl(path: impl AsRef<Path>) -> Result<UnlabeledCorpus> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut order: Vec<String> = Vec::new();
    let mut per_doc: BTreeMap<String, BTreeMap<usize, String>> = BTreeMap::new();
    for (i, line) in content.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let row: JsonlSentence = serde_json::from_str(line)
            .map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        if row.text.trim().is_empty() {
            return Err(Error::parse(path, lineno, "empty sentence text"));
        }
        if !per_doc.contains_key(&row.doc_id) {
            order.push(row.doc_id.clone());
        }
        let doc = per_doc.entry(row.doc_id.clone()).or_default();
        if doc.insert(row.index, row.text).is_some() {
            return Err(Error::DuplicateSentence {
                story: row.doc_id,
                index: row.index,
            });
        }
    }
    let mut documents = Vec::with_capacity(order.len());
    for doc_id in order {
        let sentences = per_doc.remove(&doc_id).unwrap();
        for (want, (&index, _)) in sentences.iter().enumerate() {
            if index != want {
                return Err(Error::InvalidValue {
                    what: "unlabeled document",
                    msg: format!("'{doc_id}': sentence indices not contiguous at {index}"),
                });
            }
        }
        documents.push(UnlabeledDoc {
            doc_id,
            sentences: sentences.into_values().collect(),
        });
    }
    Ok(UnlabeledCorpus { documents })
}

/// Write an unlabeled corpus as JSON Lines (the inverse of
/// [`ingest_unlabeled_jsonl`]).
pub fn export_unlabeled(corpus: &UnlabeledCorpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for doc in &corpus.documents {
        for (index, text) in doc.sentences.iter().enumerate() {
            let row = JsonlSentence {
                doc_id: doc.doc_id.clone(),
                index,
                text: text.clone(),
            };
            out.push_str(&serde_json::to_string(&row).expect("jsonl row"));
            out.push('\n');
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Read one raw text file as a single document, splitting it into sentences.
/// The document id is the file stem.
pub fn ingest_unlabeled_text(path: impl AsRef<Path>) -> Result<UnlabeledCorpus> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let doc_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "doc".to_string());
    let sentences = split_sentences(&content);
    if sentences.is_empty() {
        return Ok(UnlabeledCorpus::default());
    }
    Ok(UnlabeledCorpus {
        documents: vec![UnlabeledDoc { doc_id, sentences }],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn write(dir: &tempfile::TempDir, name: &str, content: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        fs::write(&p, content).unwrap();
        p
    }

    const TWO_STORIES: &str = "\
story_a\tGrimm\t0\tOnce upon a time.\tneutral\tneutral\tneutral
story_a\tGrimm\t1\tA wolf appeared!\tfear\tnegative_surprise\tfear
story_b\tPotter\t0\tThe end.\thappiness\thappiness\tneutral
story_b\tPotter\t1\tReally the end.\tneutral\thappiness\t
";

    #[test]
    fn ingest_groups_and_orders() {
        let dir = tempdir().unwrap();
        let p = write(&dir, "corpus.tsv", TWO_STORIES);
        let stories = ingest_labeled(&p).unwrap();
        assert_eq!(stories.len(), 2);
        assert_eq!(stories[0].story_id, StoryId::new("story_a"));
        assert_eq!(stories[0].author, Author::Grimm);
        assert_eq!(stories[0].sentences[1].labels[&AnnotatorId(2)], EmotionLabel::NegativeSurprise);
        // a3 empty on the last row
        assert_eq!(stories[1].sentences[1].labels.len(), 2);
    }

    #[test]
    fn round_trip_is_identity() {
        let dir = tempdir().unwrap();
        let p = write(&dir, "corpus.tsv", TWO_STORIES);
        let stories = ingest_labeled(&p).unwrap();
        let p2 = dir.path().join("again.tsv");
        export_labeled(&stories, &p2).unwrap();
        let again = ingest_labeled(&p2).unwrap();
        assert_eq!(stories, again);
    }

    #[test]
    fn reduced_scheme_violation_is_named() {
        let dir = tempdir().unwrap();
        let p = write(
            &dir,
            "bad.tsv",
            "s\tGrimm\t0\tText.\tneutral\tneutral\tpositive_surprise\n",
        );
        let err = ingest_labeled(&p).unwrap_err();
        assert!(matches!(err, Error::SchemeViolation { annotator: 3, .. }));
    }

    #[test]
    fn unknown_label_reports_line() {
        let dir = tempdir().unwrap();
        let p = write(&dir, "bad.tsv", "s\tGrimm\t0\tText.\tjoy\tneutral\t\n");
        match ingest_labeled(&p).unwrap_err() {
            Error::Parse { line, msg, .. } => {
                assert_eq!(line, 1);
                assert!(msg.contains("joy"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn duplicate_sentence_detected() {
        let dir = tempdir().unwrap();
        let p = write(
            &dir,
            "dup.tsv",
            "s\tGrimm\t0\tA.\tneutral\tneutral\t\ns\tGrimm\t0\tB.\tneutral\tneutral\t\n",
        );
        assert!(matches!(
            ingest_labeled(&p).unwrap_err(),
            Error::DuplicateSentence { .. }
        ));
    }

    #[test]
    fn missing_column_is_an_error() {
        let dir = tempdir().unwrap();
        let p = write(&dir, "short.tsv", "s\tGrimm\t0\tText.\tneutral\tneutral\n");
        assert!(matches!(ingest_labeled(&p).unwrap_err(), Error::Parse { .. }));
    }

    #[test]
    fn jsonl_round_trip_keeps_order() {
        let dir = tempdir().unwrap();
        let p = write(
            &dir,
            "gb.jsonl",
            r#"{"doc_id":"z_doc","index":0,"text":"First."}
{"doc_id":"z_doc","index":1,"text":"Second."}
{"doc_id":"a_doc","index":0,"text":"Other."}
"#,
        );
        let corpus = ingest_unlabeled_jsonl(&p).unwrap();
        assert_eq!(corpus.documents[0].doc_id, "z_doc");
        assert_eq!(corpus.sentence_count(), 3);
        let p2 = dir.path().join("again.jsonl");
        export_unlabeled(&corpus, &p2).unwrap();
        assert_eq!(corpus, ingest_unlabeled_jsonl(&p2).unwrap());
    }

    #[test]
    fn jsonl_rejects_empty_sentence() {
        let dir = tempdir().unwrap();
        let p = write(&dir, "gb.jsonl", r#"{"doc_id":"d","index":0,"text":"  "}"#);
        assert!(ingest_unlabeled_jsonl(&p).is_err());
    }

    #[test]
    fn raw_text_becomes_one_document() {
        let dir = tempdir().unwrap();
        let p = write(&dir, "tale.txt", "Once upon a time. The end.");
        let corpus = ingest_unlabeled_text(&p).unwrap();
        assert_eq!(corpus.documents.len(), 1);
        assert_eq!(corpus.documents[0].doc_id, "tale");
        assert_eq!(corpus.documents[0].sentences.len(), 2);
    }
}
