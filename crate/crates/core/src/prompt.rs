//! Prompt templates and the canonical answer formats of the three
//! sequential phases (topics, then one polarity and one verbatim list per
//! topic).

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Polarity;

pub const REVIEW: &str = "{review}";
pub const TOPIC: &str = "{topic}";
pub const POLARITY: &str = "{polarity}";

/// Separator between verbatims in a verbatim-phase answer.
pub const VERBATIM_SEPARATOR: &str = " | ";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PromptTemplates {
    pub topic_q: String,
    pub polarity_q: String,
    pub verbatim_q: String,
}

impl Default for PromptTemplates {
    fn default() -> Self {
        Self {
            topic_q: "identify the topics discussed in the review : {review}".into(),
            polarity_q: "identify the polarity of the topic {topic} in the review : {review}".into(),
            verbatim_q: "extract the verbatims for the topic {topic} with {polarity} polarity from the review : {review}"
                .into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Topic,
    Polarity,
    Verbatim,
}

/// Slot values recovered from a prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedPrompt {
    pub phase: Phase,
    pub review: String,
    pub topic: Option<String>,
    pub polarity: Option<String>,
}

const SLOTS: [&str; 3] = [REVIEW, TOPIC, POLARITY];

#[derive(Debug, PartialEq)]
enum Part<'a> {
    Lit(&'a str),
    Slot(&'a str),
}

fn parts(template: &str) -> Vec<Part<'_>> {
    let mut out = Vec::new();
    let mut rest = template;
    while !rest.is_empty() {
        let next = SLOTS.iter().filter_map(|s| rest.find(s).map(|i| (i, *s))).min();
        match next {
            Some((i, slot)) => {
                if i > 0 {
                    out.push(Part::Lit(&rest[..i]));
                }
                out.push(Part::Slot(slot));
                rest = &rest[i + slot.len()..];
            }
            None => {
                out.push(Part::Lit(rest));
                rest = "";
            }
        }
    }
    out
}

/// Matches `prompt` against `template`. A slot followed by a literal ends
/// at the literal's first occurrence; a trailing slot takes the rest.
fn extract<'p>(template: &str, prompt: &'p str) -> Option<BTreeMap<&'static str, &'p str>> {
    let ps = parts(template);
    let mut out = BTreeMap::new();
    let mut pos = 0;
    for (i, part) in ps.iter().enumerate() {
        match part {
            Part::Lit(l) => {
                if !prompt[pos..].starts_with(l) {
                    return None;
                }
                pos += l.len();
            }
            Part::Slot(name) => {
                let end = match ps.get(i + 1) {
                    None => prompt.len(),
                    Some(Part::Lit(l)) if i + 2 == ps.len() => {
                        if !prompt.ends_with(l) || prompt.len() < pos + l.len() {
                            return None;
                        }
                        prompt.len() - l.len()
                    }
                    Some(Part::Lit(l)) => pos + prompt[pos..].find(l)?,
                    Some(Part::Slot(_)) => return None,
                };
                let value = &prompt[pos..end];
                if value.is_empty() {
                    return None;
                }
                let key = SLOTS.iter().copied().find(|s| s == name)?;
                out.insert(key, value);
                pos = end;
            }
        }
    }
    (pos == prompt.len()).then_some(out)
}

impl PromptTemplates {
    pub fn validate(&self) -> Result<()> {
        let need = |name: &'static str, t: &str, required: &[&'static str]| -> Result<()> {
            for slot in SLOTS {
                let count = t.matches(slot).count();
                let wanted = usize::from(required.contains(&slot));
                if count != wanted {
                    return Err(Error::TemplateSlot { name, slot });
                }
            }
            let ps = parts(t);
            if ps.windows(2).any(|w| matches!(w, [Part::Slot(_), Part::Slot(_)])) {
                return Err(Error::Config {
                    field: alloc::format!("templates.{name}"),
                    message: "slots must be separated by literal text".into(),
                });
            }
            Ok(())
        };
        need("topic_q", &self.topic_q, &[REVIEW])?;
        need("polarity_q", &self.polarity_q, &[REVIEW, TOPIC])?;
        need("verbatim_q", &self.verbatim_q, &[REVIEW, TOPIC, POLARITY])
    }

    pub fn topic_prompt(&self, review: &str) -> String {
        self.topic_q.replace(REVIEW, review)
    }

    pub fn polarity_prompt(&self, review: &str, topic: &str) -> String {
        fill(&self.polarity_q, review, Some(topic), None)
    }

    pub fn verbatim_prompt(&self, review: &str, topic: &str, polarity: Polarity) -> String {
        fill(&self.verbatim_q, review, Some(topic), Some(polarity.as_str()))
    }

    /// Recovers the phase and slot values of a prompt built from these
    /// templates. Templates with more slots are tried first.
    pub fn parse(&self, prompt: &str) -> Option<ParsedPrompt> {
        for (phase, template) in [
            (Phase::Verbatim, &self.verbatim_q),
            (Phase::Polarity, &self.polarity_q),
            (Phase::Topic, &self.topic_q),
        ] {
            if let Some(slots) = extract(template, prompt) {
                return Some(ParsedPrompt {
                    phase,
                    review: slots.get(REVIEW)?.to_string(),
                    topic: slots.get(TOPIC).map(|s| s.to_string()),
                    polarity: slots.get(POLARITY).map(|s| s.to_string()),
                });
            }
        }
        None
    }
}

/// Substitutes slots in one left-to-right pass so slot-like text inside
/// values is never re-expanded.
fn fill(template: &str, review: &str, topic: Option<&str>, polarity: Option<&str>) -> String {
    let mut out = String::with_capacity(template.len() + review.len());
    for part in parts(template) {
        match part {
            Part::Lit(l) => out.push_str(l),
            Part::Slot(REVIEW) => out.push_str(review),
            Part::Slot(TOPIC) => out.push_str(topic.unwrap_or(TOPIC)),
            Part::Slot(_) => out.push_str(polarity.unwrap_or(POLARITY)),
        }
    }
    out
}

/// `[a, b, c]`; `[]` when empty.
pub fn format_topic_list<S: AsRef<str>>(names: &[S]) -> String {
    let mut out = String::from("[");
    for (i, n) in names.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(n.as_ref());
    }
    out.push(']');
    out
}

pub fn format_verbatims<S: AsRef<str>>(verbatims: &[S]) -> String {
    let mut out = String::new();
    for (i, v) in verbatims.iter().enumerate() {
        if i > 0 {
            out.push_str(VERBATIM_SEPARATOR);
        }
        out.push_str(v.as_ref());
    }
    out
}

/// A parsed answer and whether the lenient fallback was needed.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<T> {
    pub value: T,
    pub lenient: bool,
}

fn unquote(s: &str) -> &str {
    s.trim().trim_matches(|c| c == '"' || c == '\'').trim()
}

/// Splits after stripping brackets, on commas.
fn lenient_items(s: &str) -> Vec<String> {
    s.trim()
        .trim_start_matches('[')
        .trim_end_matches(']')
        .split(',')
        .map(unquote)
        .filter(|x| !x.is_empty())
        .map(ToString::to_string)
        .collect()
}

pub fn parse_topic_list(s: &str) -> Option<Parsed<Vec<String>>> {
    let t = s.trim();
    if let Some(inner) = t.strip_prefix('[').and_then(|x| x.strip_suffix(']')) {
        if inner.trim().is_empty() {
            return Some(Parsed { value: Vec::new(), lenient: false });
        }
        let items: Vec<&str> = inner.split(", ").collect();
        if items.iter().all(|i| !i.is_empty() && i.trim() == *i && !i.contains(',')) {
            return Some(Parsed {
                value: items.into_iter().map(ToString::to_string).collect(),
                lenient: false,
            });
        }
    }
    let items = lenient_items(t);
    (!items.is_empty()).then_some(Parsed { value: items, lenient: true })
}

/// Only positive and negative are accepted.
pub fn parse_polarity(s: &str) -> Option<Parsed<Polarity>> {
    let strict = match s.trim() {
        "positive" => Some(Polarity::Positive),
        "negative" => Some(Polarity::Negative),
        _ => None,
    };
    if let Some(p) = strict {
        return Some(Parsed { value: p, lenient: false });
    }
    let cleaned: String = s
        .chars()
        .filter(|c| c.is_alphabetic())
        .flat_map(char::to_lowercase)
        .collect();
    match Polarity::parse(&cleaned)? {
        Polarity::Neutral => None,
        p => Some(Parsed { value: p, lenient: true }),
    }
}

pub fn parse_verbatims(s: &str) -> Option<Parsed<Vec<String>>> {
    let t = s.trim();
    if t.is_empty() {
        return None;
    }
    if !(t.starts_with('[') && t.ends_with(']')) {
        let items: Vec<&str> = t.split(VERBATIM_SEPARATOR).map(str::trim).collect();
        if items.iter().all(|i| !i.is_empty()) {
            return Some(Parsed {
                value: items.into_iter().map(ToString::to_string).collect(),
                lenient: false,
            });
        }
    }
    let items = lenient_items(t);
    (!items.is_empty()).then_some(Parsed { value: items, lenient: true })
}
