//! Reconciles generated topic names with the taxonomy: syntactic match, then
//! semantic replacement, L4 surfacing or a new L3 proposal.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::adapter::{RawBundle, RawTopic};
use crate::embedding::Similarity;
use crate::error::{Error, Result};
use crate::model::{
    fold_name, GranularTopic, Insight, LabelledRecord, Polarity, Provenance, Taxonomy, TopicLevel, TopicRef,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PostConfig {
    pub exact_replace: f64,
    pub l4_topic: f64,
    pub l4_verbatim: f64,
}

impl Default for PostConfig {
    fn default() -> Self {
        Self {
            exact_replace: 0.95,
            l4_topic: 0.7,
            l4_verbatim: 0.4,
        }
    }
}

impl PostConfig {
    /// Requires `0 < l4_verbatim <= l4_topic <= exact_replace <= 1`.
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("post.l4_verbatim", self.l4_verbatim > 0.0 && self.l4_verbatim <= self.l4_topic),
            ("post.l4_topic", self.l4_topic <= self.exact_replace),
            ("post.exact_replace", self.exact_replace <= 1.0),
        ];
        match checks.iter().find(|(_, ok)| !ok) {
            None => Ok(()),
            Some((field, _)) => Err(Error::Config {
                field: (*field).into(),
                message: format!(
                    "need 0 < l4_verbatim <= l4_topic <= exact_replace <= 1, got {} / {} / {}",
                    self.l4_verbatim, self.l4_topic, self.exact_replace
                ),
            }),
        }
    }
}

/// Result of the semantic thresholds alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Replace,
    L4,
    NewL3,
}

/// All comparisons are strict.
pub fn route(score_t: f64, score_v: f64, cfg: &PostConfig) -> Route {
    if score_t > cfg.exact_replace {
        Route::Replace
    } else if score_t > cfg.l4_topic && score_v > cfg.l4_verbatim {
        Route::L4
    } else {
        Route::NewL3
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    SyntacticExact { topic_id: String },
    SyntacticPartial { topic_id: String },
    ReplacedSemantic { topic_id: String },
    #[serde(rename = "surfaced_l4")]
    SurfacedL4 { parent: String },
    #[serde(rename = "surfaced_new_l3")]
    SurfacedNewL3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticScores {
    pub score_t: f64,
    pub score_v: f64,
    pub topic_t: Option<String>,
    pub topic_v: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostDecision {
    pub input_topic: String,
    pub polarity: Polarity,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<SemanticScores>,
}

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_lowercase).collect()
}

fn is_subsequence(hay: &[String], needle: &[String]) -> bool {
    let mut rest = hay.iter();
    !needle.is_empty() && needle.iter().all(|w| rest.any(|h| h == w))
}

/// Exact case-folded name match, else the lowest-id topic whose name
/// contains the generated name's words in order (gaps allowed).
pub fn syntactic_match<'t>(g: &str, candidates: &[&'t GranularTopic]) -> Option<(&'t GranularTopic, bool)> {
    let folded = fold_name(g);
    let exact = candidates
        .iter()
        .filter(|t| fold_name(&t.name) == folded)
        .min_by(|a, b| (a.level, &a.id).cmp(&(b.level, &b.id)));
    if let Some(t) = exact {
        return Some((t, true));
    }
    let needle = words(g);
    candidates
        .iter()
        .filter(|t| is_subsequence(&words(&t.name), &needle))
        .min_by(|a, b| a.id.cmp(&b.id))
        .map(|t| (*t, false))
}

/// Best name similarity and best verbatim-to-keyword similarity over
/// `candidates`; ties keep the earliest topic.
pub fn semantic_scores(
    g: &str,
    verbatims: &[String],
    candidates: &[&GranularTopic],
    sim: &Similarity<'_>,
) -> Result<SemanticScores> {
    let mut out = SemanticScores {
        score_t: 0.0,
        score_v: 0.0,
        topic_t: None,
        topic_v: None,
    };
    for t in candidates {
        let s = sim.sim(g, &t.name)?;
        if out.topic_t.is_none() || s > out.score_t {
            out.score_t = s;
            out.topic_t = Some(t.id.clone());
        }
        for k in &t.keywords {
            for v in verbatims {
                let s = sim.sim(v, k)?;
                if out.topic_v.is_none() || s > out.score_v {
                    out.score_v = s;
                    out.topic_v = Some(t.id.clone());
                }
            }
        }
    }
    Ok(out)
}

/// Routes one generated topic. Candidates are the taxonomy topics (L3 and
/// L4) of the generated polarity.
pub fn decide(
    g: &RawTopic,
    taxonomy: &Taxonomy,
    cfg: &PostConfig,
    sim: &Similarity<'_>,
) -> Result<PostDecision> {
    let candidates: Vec<&GranularTopic> = taxonomy.topics.iter().filter(|t| t.polarity == g.polarity).collect();
    let decision = |outcome, scores| PostDecision {
        input_topic: g.name.clone(),
        polarity: g.polarity,
        outcome,
        scores,
    };
    if let Some((t, exact)) = syntactic_match(&g.name, &candidates) {
        let topic_id = t.id.clone();
        let outcome = if exact {
            Outcome::SyntacticExact { topic_id }
        } else {
            Outcome::SyntacticPartial { topic_id }
        };
        return Ok(decision(outcome, None));
    }
    let scores = semantic_scores(&g.name, &g.verbatims, &candidates, sim)?;
    let outcome = match (&scores.topic_t, route(scores.score_t, scores.score_v, cfg)) {
        (Some(id), Route::Replace) => Outcome::ReplacedSemantic { topic_id: id.clone() },
        (Some(id), Route::L4) => Outcome::SurfacedL4 {
            parent: l3_of(taxonomy, id).map_or_else(|| id.clone(), |t| t.id.clone()),
        },
        _ => Outcome::SurfacedNewL3,
    };
    Ok(decision(outcome, Some(scores)))
}

/// The topic itself when L3, its parent when L4.
fn l3_of<'t>(taxonomy: &'t Taxonomy, id: &str) -> Option<&'t GranularTopic> {
    let t = taxonomy.get(id)?;
    match (&t.level, &t.parent_l3) {
        (TopicLevel::L4, Some(p)) => taxonomy.get(p),
        _ => Some(t),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProposedL4 {
    pub name: String,
    pub polarity: Polarity,
    pub parent: String,
    pub verbatims: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProposedL3 {
    pub name: String,
    pub polarity: Polarity,
    pub verbatims: Vec<String>,
}

/// Topics proposed for human review; never applied implicitly.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyDelta {
    pub base_version: u64,
    pub l4: Vec<ProposedL4>,
    pub new_l3: Vec<ProposedL3>,
}

impl TaxonomyDelta {
    pub fn is_empty(&self) -> bool {
        self.l4.is_empty() && self.new_l3.is_empty()
    }

    pub fn len(&self) -> usize {
        self.l4.len() + self.new_l3.len()
    }
}

/// One bundle's post-processed record and routing audit.
#[derive(Debug, Clone, PartialEq)]
pub struct BundleResult {
    pub record: LabelledRecord,
    pub decisions: Vec<PostDecision>,
    pub warnings: Vec<String>,
}

fn push_unique(into: &mut Vec<String>, from: &[String]) {
    for v in from {
        if !into.contains(v) {
            into.push(v.clone());
        }
    }
}

pub fn postprocess_bundle(
    bundle: &RawBundle,
    taxonomy: &Taxonomy,
    cfg: &PostConfig,
    sim: &Similarity<'_>,
) -> Result<BundleResult> {
    let mut insights: Vec<Insight> = Vec::new();
    let mut decisions = Vec::with_capacity(bundle.topics.len());
    let mut warnings = bundle.warnings.clone();
    for g in &bundle.topics {
        let d = decide(g, taxonomy, cfg, sim)?;
        let version = taxonomy.version;
        let existing = |id: &str| -> Result<(TopicRef, Option<String>)> {
            let t = taxonomy
                .get(id)
                .ok_or_else(|| Error::Taxonomy(format!("unknown topic `{id}`")))?;
            let l3 = l3_of(taxonomy, id).ok_or_else(|| Error::Taxonomy(format!("dangling parent of `{id}`")))?;
            let sub = (t.level == TopicLevel::L4).then(|| t.name.clone());
            Ok((TopicRef::of(l3, version), sub))
        };
        let (topic, subtopic, provenance) = match &d.outcome {
            Outcome::SyntacticExact { topic_id }
            | Outcome::SyntacticPartial { topic_id }
            | Outcome::ReplacedSemantic { topic_id } => {
                let (r, s) = existing(topic_id)?;
                (r, s, Provenance::GeneratedExisting)
            }
            Outcome::SurfacedL4 { parent } => {
                let (r, _) = existing(parent)?;
                (r, Some(g.name.clone()), Provenance::GeneratedL4)
            }
            Outcome::SurfacedNewL3 => (TopicRef::Generated { name: g.name.clone() }, None, Provenance::GeneratedNewL3),
        };
        decisions.push(d);
        if g.verbatims.is_empty() {
            warnings.push(format!("`{}` has no verbatims; no insight emitted", g.name));
            continue;
        }
        match insights
            .iter_mut()
            .find(|i| i.topic == topic && i.subtopic == subtopic && i.polarity == g.polarity)
        {
            Some(i) => push_unique(&mut i.verbatims, &g.verbatims),
            None => {
                let mut verbatims = Vec::new();
                push_unique(&mut verbatims, &g.verbatims);
                insights.push(Insight {
                    topic,
                    subtopic,
                    polarity: g.polarity,
                    verbatims,
                    provenance,
                });
            }
        }
    }
    Ok(BundleResult {
        record: LabelledRecord {
            review: bundle.review.clone(),
            insights,
        },
        decisions,
        warnings,
    })
}

/// Collects proposals in input order, one per (case-folded name, polarity).
pub fn collect_delta<'r>(base_version: u64, results: impl IntoIterator<Item = &'r BundleResult>) -> TaxonomyDelta {
    let mut delta = TaxonomyDelta {
        base_version,
        ..TaxonomyDelta::default()
    };
    let mut seen = BTreeSet::new();
    for r in results {
        for ins in &r.record.insights {
            let (name, parent) = match (&ins.provenance, &ins.subtopic) {
                (Provenance::GeneratedL4, Some(sub)) => (sub.as_str(), ins.topic.id()),
                (Provenance::GeneratedNewL3, _) => (ins.topic.name(), None),
                _ => continue,
            };
            if !seen.insert((fold_name(name), ins.polarity)) {
                continue;
            }
            match parent {
                Some(parent) => delta.l4.push(ProposedL4 {
                    name: name.to_string(),
                    polarity: ins.polarity,
                    parent: parent.to_string(),
                    verbatims: ins.verbatims.clone(),
                }),
                None => delta.new_l3.push(ProposedL3 {
                    name: name.to_string(),
                    polarity: ins.polarity,
                    verbatims: ins.verbatims.clone(),
                }),
            }
        }
    }
    delta
}

pub struct PostOutput {
    pub results: Vec<BundleResult>,
    pub delta: TaxonomyDelta,
}

pub fn apply_postprocessing(
    bundles: &[RawBundle],
    taxonomy: &Taxonomy,
    cfg: &PostConfig,
    sim: &Similarity<'_>,
) -> Result<PostOutput> {
    cfg.validate()?;
    let results = bundles
        .iter()
        .map(|b| postprocess_bundle(b, taxonomy, cfg, sim))
        .collect::<Result<Vec<_>>>()?;
    let delta = collect_delta(taxonomy.version, &results);
    Ok(PostOutput { results, delta })
}

/// Hinge and coarse names given to accepted new L3 topics until an
/// annotator places them.
pub const UNASSIGNED: &str = "unassigned";

/// Accepts every proposal: L4 topics under their parent, new L3 topics under
/// [`UNASSIGNED`], each keyed by its example verbatims. Bumps the version.
pub fn apply_delta(taxonomy: &Taxonomy, delta: &TaxonomyDelta) -> Result<Taxonomy> {
    let mut out = taxonomy.clone();
    out.version += 1;
    for p in &delta.l4 {
        let parent = taxonomy
            .get(&p.parent)
            .ok_or_else(|| Error::Taxonomy(format!("delta parent `{}` not in taxonomy", p.parent)))?;
        let t = GranularTopic::l4(&p.name, parent, p.verbatims.iter().cloned());
        if out.get(&t.id).is_none() {
            out.topics.push(t);
        }
    }
    for p in &delta.new_l3 {
        let t = GranularTopic::l3(&p.name, UNASSIGNED, UNASSIGNED, p.polarity, p.verbatims.iter().cloned());
        if out.get(&t.id).is_none() {
            out.topics.push(t);
        }
    }
    Ok(out)
}

/// Output row: L1/L2 are absent for a new L3 topic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierRow {
    #[serde(rename = "L1")]
    pub l1: Option<String>,
    #[serde(rename = "L2")]
    pub l2: Option<String>,
    #[serde(rename = "L3")]
    pub l3: String,
    #[serde(rename = "L4", default, skip_serializing_if = "Option::is_none")]
    pub l4: Option<String>,
    pub polarity: Polarity,
    pub verbatims: Vec<String>,
}

pub fn hierarchical(insight: &Insight, taxonomy: &Taxonomy) -> HierRow {
    let t = insight.topic.id().and_then(|id| taxonomy.get(id));
    HierRow {
        l1: t.map(|t| t.coarse.clone()),
        l2: t.map(|t| t.hinge.clone()),
        l3: insight.topic.name().to_string(),
        l4: insight.subtopic.clone(),
        polarity: insight.polarity,
        verbatims: insight.verbatims.clone(),
    }
}
