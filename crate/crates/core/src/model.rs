//! Shared domain types: reviews, segments, taxonomy topics, insights and
//! labelled records, plus taxonomy validation.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A customer review as read from the reviews JSON Lines file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Review {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
}

impl Review {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            category: None,
        }
    }

    /// Pipeline entry points reject reviews whose text is blank.
    pub fn ensure_text(&self) -> Result<()> {
        if self.text.trim().is_empty() {
            return Err(Error::EmptyReview {
                id: self.id.clone(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
    Neutral,
}

impl Polarity {
    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Positive => "positive",
            Polarity::Negative => "negative",
            Polarity::Neutral => "neutral",
        }
    }

    /// Case-insensitive parse of the canonical lowercase names.
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_lowercase().as_str() {
            "positive" => Some(Polarity::Positive),
            "negative" => Some(Polarity::Negative),
            "neutral" => Some(Polarity::Neutral),
            _ => None,
        }
    }

    pub fn is_polarized(self) -> bool {
        self != Polarity::Neutral
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A phrase cut out of a review. `char_span` holds byte offsets into the
/// review text; `text` is exactly that slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub review_id: String,
    pub text: String,
    pub char_span: (usize, usize),
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polarity: Option<Polarity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos_score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neg_score: Option<f64>,
}

impl Segment {
    pub fn new(review_id: impl Into<String>, text: impl Into<String>, span: (usize, usize)) -> Self {
        Self {
            review_id: review_id.into(),
            text: text.into(),
            char_span: span,
            polarity: None,
            pos_score: None,
            neg_score: None,
        }
    }

    pub fn with_polarity(mut self, polarity: Polarity) -> Self {
        self.polarity = Some(polarity);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TopicLevel {
    L3,
    L4,
}

/// A taxonomy leaf: an L3 granular topic or an L4 subtopic of one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GranularTopic {
    pub id: String,
    pub name: String,
    pub hinge: String,
    pub coarse: String,
    pub polarity: Polarity,
    pub keywords: Vec<String>,
    pub level: TopicLevel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_l3: Option<String>,
}

impl GranularTopic {
    pub fn l3(
        name: impl Into<String>,
        hinge: impl Into<String>,
        coarse: impl Into<String>,
        polarity: Polarity,
        keywords: impl IntoIterator<Item = impl Into<String>>,
    ) -> Self {
        let name = name.into();
        Self {
            id: topic_slug(&name, polarity),
            name,
            hinge: hinge.into(),
            coarse: coarse.into(),
            polarity,
            keywords: keywords.into_iter().map(Into::into).collect(),
            level: TopicLevel::L3,
            parent_l3: None,
        }
    }

    /// An L4 subtopic inheriting its parent's hierarchy.
    pub fn l4(
        name: impl Into<String>,
        parent: &GranularTopic,
        keywords: impl IntoIterator<Item = impl Into<String>>,
    ) -> Self {
        let name = name.into();
        Self {
            id: format!("{}/{}", parent.id, topic_slug(&name, parent.polarity)),
            name,
            hinge: parent.hinge.clone(),
            coarse: parent.coarse.clone(),
            polarity: parent.polarity,
            keywords: keywords.into_iter().map(Into::into).collect(),
            level: TopicLevel::L4,
            parent_l3: Some(parent.id.clone()),
        }
    }
}

/// Stable topic identity derived from `(name, polarity)`, e.g.
/// `great-responsiveness.positive`.
pub fn topic_slug(name: &str, polarity: Polarity) -> String {
    let mut slug = String::with_capacity(name.len() + 10);
    let mut pending_dash = false;
    for c in name.chars() {
        if c.is_alphanumeric() {
            if pending_dash && !slug.is_empty() {
                slug.push('-');
            }
            pending_dash = false;
            slug.extend(c.to_lowercase());
        } else {
            pending_dash = true;
        }
    }
    slug.push('.');
    slug.push_str(polarity.as_str());
    slug
}

/// Lowercased, whitespace-collapsed form used for name comparisons.
pub fn fold_name(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    for word in name.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(&word.to_lowercase());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Taxonomy {
    pub version: u64,
    pub topics: Vec<GranularTopic>,
}

impl Default for Taxonomy {
    fn default() -> Self {
        Self {
            version: 1,
            topics: Vec::new(),
        }
    }
}

impl Taxonomy {
    pub fn new(version: u64, topics: Vec<GranularTopic>) -> Self {
        Self { version, topics }
    }

    pub fn get(&self, id: &str) -> Option<&GranularTopic> {
        self.topics.iter().find(|t| t.id == id)
    }

    /// L3 topics of one polarity, in taxonomy order.
    pub fn l3_of(&self, polarity: Polarity) -> Vec<&GranularTopic> {
        self.topics
            .iter()
            .filter(|t| t.level == TopicLevel::L3 && t.polarity == polarity)
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.topics.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Rule {
    EmptyName,
    DuplicateId,
    DuplicateName,
    NeutralPolarity,
    HingeConflict,
    MissingParent,
    UnexpectedParent,
    DanglingParent,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub topic_id: String,
    pub rule: Rule,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {:?}: {}", self.topic_id, self.rule, self.detail)
    }
}

/// Checks every taxonomy invariant and returns the violations found.
/// An empty result means the taxonomy is consistent.
pub fn validate_taxonomy(taxonomy: &Taxonomy) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |topic: &GranularTopic, rule: Rule, detail: String| {
        out.push(Violation {
            topic_id: topic.id.clone(),
            rule,
            detail,
        })
    };

    let mut ids: BTreeMap<&str, usize> = BTreeMap::new();
    let mut names: BTreeMap<(String, Polarity), &str> = BTreeMap::new();
    let mut hinges: BTreeMap<&str, &str> = BTreeMap::new();

    for topic in &taxonomy.topics {
        if topic.name.trim().is_empty() {
            push(topic, Rule::EmptyName, "topic name is blank".to_string());
        }
        let seen = ids.entry(topic.id.as_str()).or_insert(0);
        *seen += 1;
        if *seen == 2 {
            push(topic, Rule::DuplicateId, "id used by more than one topic".to_string());
        }
        if !topic.polarity.is_polarized() {
            push(topic, Rule::NeutralPolarity, "topics must be positive or negative".to_string());
        }
        match hinges.get(topic.hinge.as_str()) {
            Some(coarse) if *coarse != topic.coarse => push(
                topic,
                Rule::HingeConflict,
                format!(
                    "hinge `{}` already belongs to coarse `{}`, not `{}`",
                    topic.hinge, coarse, topic.coarse
                ),
            ),
            Some(_) => {}
            None => {
                hinges.insert(topic.hinge.as_str(), topic.coarse.as_str());
            }
        }
        match topic.level {
            TopicLevel::L3 => {
                if topic.parent_l3.is_some() {
                    push(topic, Rule::UnexpectedParent, "L3 topics take no parent".to_string());
                }
                let key = (fold_name(&topic.name), topic.polarity);
                match names.get(&key) {
                    Some(first) if *first != topic.id => push(
                        topic,
                        Rule::DuplicateName,
                        format!("({}, {}) already used by `{}`", topic.name, topic.polarity, first),
                    ),
                    Some(_) => {}
                    None => {
                        names.insert(key, topic.id.as_str());
                    }
                }
            }
            TopicLevel::L4 => match &topic.parent_l3 {
                None => push(topic, Rule::MissingParent, "L4 topic without parent_l3".to_string()),
                Some(parent) => {
                    let ok = taxonomy
                        .topics
                        .iter()
                        .any(|t| &t.id == parent && t.level == TopicLevel::L3);
                    if !ok {
                        push(
                            topic,
                            Rule::DanglingParent,
                            format!("parent `{parent}` is not an L3 topic of this taxonomy"),
                        );
                    }
                }
            },
        }
    }
    out
}

/// Where a topic reference points.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TopicRef {
    /// A taxonomy topic at a given taxonomy version.
    Taxonomy { id: String, name: String, version: u64 },
    /// A generated name with no taxonomy counterpart.
    Generated { name: String },
}

impl TopicRef {
    pub fn of(topic: &GranularTopic, version: u64) -> Self {
        TopicRef::Taxonomy {
            id: topic.id.clone(),
            name: topic.name.clone(),
            version,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            TopicRef::Taxonomy { name, .. } | TopicRef::Generated { name } => name,
        }
    }

    pub fn id(&self) -> Option<&str> {
        match self {
            TopicRef::Taxonomy { id, .. } => Some(id),
            TopicRef::Generated { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Matched,
    GeneratedExisting,
    #[serde(rename = "generated_l4")]
    GeneratedL4,
    #[serde(rename = "generated_new_l3")]
    GeneratedNewL3,
}

/// (topic, polarity, verbatims): the unit of pipeline output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Insight {
    pub topic: TopicRef,
    /// L4 subtopic name when the insight refines `topic`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subtopic: Option<String>,
    pub polarity: Polarity,
    pub verbatims: Vec<String>,
    pub provenance: Provenance,
}

impl Insight {
    /// Evaluation label: case-folded L3 name with polarity.
    pub fn label(&self) -> (String, Polarity) {
        (fold_name(self.topic.name()), self.polarity)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelledRecord {
    pub review: Review,
    pub insights: Vec<Insight>,
}

impl LabelledRecord {
    /// Record-level invariants: polarized, non-empty insights whose verbatims
    /// occur in the review text, and matched topics present in `taxonomy`.
    pub fn check(&self, taxonomy: Option<&Taxonomy>) -> Result<()> {
        for insight in &self.insights {
            let name = insight.topic.name();
            if insight.verbatims.is_empty() {
                return Err(Error::Taxonomy(format!("insight `{name}` has no verbatims")));
            }
            if !insight.polarity.is_polarized() {
                return Err(Error::Taxonomy(format!("insight `{name}` is neutral")));
            }
            if let Some(v) = insight.verbatims.iter().find(|v| !self.review.text.contains(v.as_str())) {
                return Err(Error::Taxonomy(format!(
                    "verbatim `{v}` does not occur in review `{}`",
                    self.review.id
                )));
            }
            if let (Provenance::Matched, Some(tax), TopicRef::Taxonomy { id, version, .. }) =
                (insight.provenance, taxonomy, &insight.topic)
            {
                if *version != tax.version || tax.get(id).is_none() {
                    return Err(Error::Taxonomy(format!(
                        "matched topic `{id}` (v{version}) not in taxonomy v{}",
                        tax.version
                    )));
                }
            }
        }
        Ok(())
    }
}
