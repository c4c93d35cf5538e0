//! Rule-based review segmentation.
//!
//! A review is first cut into sentences at `.`, `!`, `?` and the word
//! "but". Each sentence is then cut into phrases at `,`, `;`, `&` and the
//! word "and", unless one of the resulting phrases would have
//! `min_phrase_words` words or fewer, in which case the sentence is kept
//! whole. Alphabetic delimiters match whole words only, case-insensitively.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Review, Segment};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmenterConfig {
    pub sentence_delimiters: Vec<String>,
    pub phrase_delimiters: Vec<String>,
    pub min_phrase_words: usize,
}

impl Default for SegmenterConfig {
    fn default() -> Self {
        Self {
            sentence_delimiters: [".", "!", "?", "but"].map(String::from).to_vec(),
            phrase_delimiters: [",", ";", "&", "and"].map(String::from).to_vec(),
            min_phrase_words: 2,
        }
    }
}

impl SegmenterConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, message: &str| Error::Config {
            field: field.to_string(),
            message: message.to_string(),
        };
        if self.min_phrase_words < 1 {
            return Err(bad("segmenter.min_phrase_words", "must be >= 1"));
        }
        for (field, set) in [
            ("segmenter.sentence_delimiters", &self.sentence_delimiters),
            ("segmenter.phrase_delimiters", &self.phrase_delimiters),
        ] {
            if set.is_empty() {
                return Err(bad(field, "must not be empty"));
            }
            if set.iter().any(|d| d.is_empty() || !d.is_ascii()) {
                return Err(bad(field, "delimiters must be non-empty ASCII tokens"));
            }
        }
        Ok(())
    }
}

fn is_word_token(d: &str) -> bool {
    d.bytes().all(|b| b.is_ascii_alphabetic())
}

/// Byte ranges of every delimiter occurrence in `text`, left to right,
/// non-overlapping.
fn delimiter_ranges(text: &str, delimiters: &[String]) -> Vec<(usize, usize)> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if !bytes[i].is_ascii() {
            i += 1;
            continue;
        }
        let hit = delimiters
            .iter()
            .filter(|d| {
                let d = d.as_bytes();
                i + d.len() <= bytes.len() && bytes[i..i + d.len()].eq_ignore_ascii_case(d)
            })
            .filter(|d| {
                !is_word_token(d)
                    || (!text[..i].chars().next_back().is_some_and(char::is_alphabetic)
                        && !text[i + d.len()..].chars().next().is_some_and(char::is_alphabetic))
            })
            .map(|d| d.len())
            .max();
        match hit {
            Some(len) => {
                out.push((i, i + len));
                i += len;
            }
            None => i += 1,
        }
    }
    out
}

fn trimmed(text: &str, start: usize, end: usize) -> Option<(usize, usize)> {
    let piece = &text[start..end];
    let lead = piece.len() - piece.trim_start().len();
    let body = piece.trim();
    if body.is_empty() {
        None
    } else {
        Some((start + lead, start + lead + body.len()))
    }
}

/// Trimmed, non-empty pieces of `text` between delimiters.
fn pieces(text: &str, delimiters: &[String]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut cursor = 0;
    for (s, e) in delimiter_ranges(text, delimiters) {
        out.extend(trimmed(text, cursor, s));
        cursor = e;
    }
    out.extend(trimmed(text, cursor, text.len()));
    out
}

fn word_count(s: &str) -> usize {
    s.split_whitespace().count()
}

/// Sentence pieces of `text` with their byte spans.
pub fn split_sentences(text: &str, cfg: &SegmenterConfig) -> Vec<(String, (usize, usize))> {
    pieces(text, &cfg.sentence_delimiters)
        .into_iter()
        .map(|(s, e)| (text[s..e].to_string(), (s, e)))
        .collect()
}

/// Phrase spans within `sentence`, relative to it. Falls back to the whole
/// (trimmed) sentence when the split would produce a phrase that is too
/// short or would not split at all.
fn phrase_spans(sentence: &str, cfg: &SegmenterConfig) -> Vec<(usize, usize)> {
    let whole = trimmed(sentence, 0, sentence.len());
    let parts = pieces(sentence, &cfg.phrase_delimiters);
    if parts.len() < 2
        || parts
            .iter()
            .any(|&(s, e)| word_count(&sentence[s..e]) <= cfg.min_phrase_words)
    {
        return whole.into_iter().collect();
    }
    parts
}

pub fn split_phrases(sentence: &str, cfg: &SegmenterConfig) -> Vec<String> {
    phrase_spans(sentence, cfg)
        .into_iter()
        .map(|(s, e)| sentence[s..e].to_string())
        .collect()
}

/// Segments of a review in source order, without polarity.
pub fn segment_review(review: &Review, cfg: &SegmenterConfig) -> Vec<Segment> {
    let text = review.text.as_str();
    let mut out = Vec::new();
    for (_, (s0, e0)) in split_sentences(text, cfg) {
        for (s, e) in phrase_spans(&text[s0..e0], cfg) {
            let span = (s0 + s, s0 + e);
            out.push(Segment::new(review.id.clone(), &text[span.0..span.1], span));
        }
    }
    out
}
