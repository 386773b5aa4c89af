//! Rule-based sentence boundary detection.
//!
//! A sentence ends after `.`, `!`, `?`, or `…` (a run of them counts once),
//! optionally followed by closing quotes or brackets, when whitespace or
//! end-of-text follows. A period does not end a sentence when it closes a
//! known abbreviation, or when it closes a single capital initial that is
//! followed by a capitalized word of two or more letters ("J. Smith").
//!
//! This is a documented approximation of external segmentation tools:
//! pre-split corpora are the preferred ingestion path, and this splitter is
//! for raw-text convenience.

/// Abbreviations after which a period never ends a sentence. Compared
/// case-insensitively against the word preceding the period.
pub const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "rev", "hon", "st", "mt", "capt", "col", "gen", "lt",
    "sgt", "jr", "sr", "messrs", "mme", "mlle", "no", "nos", "vol", "pp", "ed", "eds", "co",
    "inc", "ltd", "ave", "blvd", "rd", "vs", "etc", "e.g", "i.e", "cf", "al", "approx",
];

const TERMINALS: [char; 4] = ['.', '!', '?', '…'];
const CLOSERS: [char; 8] = ['"', '\'', '”', '’', '»', ')', ']', '}'];

fn is_terminal(c: char) -> bool {
    TERMINALS.contains(&c)
}

fn is_closer(c: char) -> bool {
    CLOSERS.contains(&c)
}

/// The word (letters, digits, and internal periods) ending at `end`
/// (exclusive), lowercased.
fn word_before(chars: &[char], end: usize) -> String {
    let mut start = end;
    while start > 0 {
        let c = chars[start - 1];
        if c.is_alphanumeric() || c == '.' {
            start -= 1;
        } else {
            break;
        }
    }
    chars[start..end].iter().collect::<String>().to_lowercase()
}

/// True when the token starting at `start` is a capitalized word of at
/// least two letters (the continuation that keeps "J. Smith" together).
fn capitalized_word_follows(chars: &[char], mut start: usize) -> bool {
    while start < chars.len() && chars[start].is_whitespace() {
        start += 1;
    }
    if start >= chars.len() || !chars[start].is_uppercase() {
        return false;
    }
    let mut len = 0;
    while start + len < chars.len() && chars[start + len].is_alphabetic() {
        len += 1;
    }
    len >= 2
}

/// Split raw text into sentences. Whitespace-only input yields an empty
/// list; no returned sentence is empty; every non-whitespace character of
/// the input is preserved in order.
pub fn split_sentences(raw_text: &str) -> Vec<String> {
    let chars: Vec<char> = raw_text.chars().collect();
    let mut sentences = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if !is_terminal(c) {
            i += 1;
            continue;
        }
        // consume the whole terminal run ("...", "?!", …)
        let mut end = i + 1;
        while end < chars.len() && is_terminal(chars[end]) {
            end += 1;
        }
        let run_len = end - i;
        // suppression rules apply only to a lone period
        if c == '.' && run_len == 1 {
            let word = word_before(&chars, i);
            let bare = word.trim_end_matches('.');
            if !bare.is_empty() && ABBREVIATIONS.contains(&bare) {
                i = end;
                continue;
            }
            let is_initial = bare.chars().count() == 1
                && bare.chars().next().is_some_and(|ch| ch.is_alphabetic())
                && chars[i - 1].is_uppercase();
            if is_initial && capitalized_word_follows(&chars, end) {
                i = end;
                continue;
            }
        }
        // trailing closing quotes/brackets belong to the sentence
        while end < chars.len() && is_closer(chars[end]) {
            end += 1;
        }
        // a boundary needs following whitespace (or end of text)
        if end < chars.len() && !chars[end].is_whitespace() {
            i = end;
            continue;
        }
        let sentence: String = chars[start..end].iter().collect::<String>().trim().to_string();
        if !sentence.is_empty() {
            sentences.push(sentence);
        }
        start = end;
        i = end;
    }
    let tail: String = chars[start..].iter().collect::<String>().trim().to_string();
    if !tail.is_empty() {
        sentences.push(tail);
    }
    sentences
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_on_terminal_punctuation() {
        assert_eq!(split_sentences("A. B! C?"), vec!["A.", "B!", "C?"]);
    }

    #[test]
    fn abbreviation_suppresses_boundary() {
        // "mr" ships in the abbreviation list; the period after it must not split
        assert!(ABBREVIATIONS.contains(&"mr"));
        assert_eq!(
            split_sentences("Mr. Smith left. He ran."),
            vec!["Mr. Smith left.", "He ran."]
        );
    }

    #[test]
    fn single_initial_before_name_suppresses_boundary() {
        assert_eq!(
            split_sentences("J. Smith left. He ran."),
            vec!["J. Smith left.", "He ran."]
        );
    }

    #[test]
    fn fragment_without_terminal_is_returned_whole() {
        assert_eq!(
            split_sentences("no terminal punctuation"),
            vec!["no terminal punctuation"]
        );
    }

    #[test]
    fn empty_and_whitespace_inputs_yield_nothing() {
        assert!(split_sentences("").is_empty());
        assert!(split_sentences("  \n\t ").is_empty());
    }

    #[test]
    fn closing_quote_stays_with_sentence() {
        assert_eq!(
            split_sentences("\"Go away!\" she said."),
            vec!["\"Go away!\"", "she said."]
        );
    }

    #[test]
    fn terminal_run_counts_once() {
        assert_eq!(
            split_sentences("Well... maybe. Fine."),
            vec!["Well...", "maybe.", "Fine."]
        );
        assert_eq!(split_sentences("What?! Now."), vec!["What?!", "Now."]);
    }

    #[test]
    fn decimal_point_does_not_split() {
        assert_eq!(
            split_sentences("It cost 3.14 dollars. Cheap."),
            vec!["It cost 3.14 dollars.", "Cheap."]
        );
    }

    #[test]
    fn no_empty_sentences_and_content_preserved() {
        let input = "One.  Two!   Three?  ";
        let parts = split_sentences(input);
        assert!(parts.iter().all(|s| !s.is_empty()));
        let joined: String = parts.join(" ").split_whitespace().collect::<Vec<_>>().join(" ");
        let normalized: String = input.split_whitespace().collect::<Vec<_>>().join(" ");
        assert_eq!(joined, normalized);
    }
}
