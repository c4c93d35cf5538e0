//! SegmentNet labelling, training-pair serialization and sentence shuffling.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::hash::Hasher;
use core::ops::AddAssign;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use siphasher::sip::SipHasher13;

use crate::embedding::Similarity;
use crate::error::Result;
use crate::matching::{match_candidates, MatchConfig, MatchOutcome};
use crate::model::{Insight, LabelledRecord, Provenance, Review, Segment, Taxonomy, TopicRef};
use crate::prompt::{format_topic_list, format_verbatims, Phase, PromptTemplates};
use crate::segment::{segment_review, SegmenterConfig};
use crate::sentiment::{classify_segment, SentimentClassifier, SentimentConfig};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingPair {
    pub prompt: String,
    pub target: String,
    pub phase: Phase,
    pub review_id: String,
}

/// Attrition counts of one labelling run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelStats {
    pub reviews: usize,
    pub segments: usize,
    pub neutral_dropped: usize,
    pub no_match_dropped: usize,
    pub insights: usize,
}

impl AddAssign for LabelStats {
    fn add_assign(&mut self, o: Self) {
        self.reviews += o.reviews;
        self.segments += o.segments;
        self.neutral_dropped += o.neutral_dropped;
        self.no_match_dropped += o.no_match_dropped;
        self.insights += o.insights;
    }
}

/// A classified segment and, when polarized, its match outcome. `None`
/// outcome with a polarized segment means the taxonomy had no candidate of
/// that polarity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentTrace {
    pub segment: Segment,
    pub outcome: Option<MatchOutcome>,
}

/// The heuristic labeller: segment, classify, drop neutral, match.
#[derive(Clone, Copy)]
pub struct SegmentNet<'a> {
    pub taxonomy: &'a Taxonomy,
    pub segmenter: &'a SegmenterConfig,
    pub sentiment: &'a SentimentConfig,
    pub matching: &'a MatchConfig,
    pub classifier: &'a dyn SentimentClassifier,
    pub sim: Similarity<'a>,
}

impl<'a> SegmentNet<'a> {
    pub fn trace(&self, review: &Review) -> Result<Vec<SegmentTrace>> {
        review.ensure_text()?;
        let mut out = Vec::new();
        for seg in segment_review(review, self.segmenter) {
            let seg = classify_segment(&seg, self.classifier, self.sentiment)?;
            let outcome = match seg.polarity {
                Some(p) if p.is_polarized() => {
                    let candidates = self.taxonomy.l3_of(p);
                    if candidates.is_empty() {
                        None
                    } else {
                        Some(match_candidates(&seg.text, &candidates, self.matching, &self.sim)?)
                    }
                }
                _ => None,
            };
            out.push(SegmentTrace { segment: seg, outcome });
        }
        Ok(out)
    }

    /// Groups surviving segments by matched topic, in first-occurrence order.
    pub fn label(&self, review: &Review) -> Result<(LabelledRecord, LabelStats)> {
        let traces = self.trace(review)?;
        let mut stats = LabelStats {
            reviews: 1,
            segments: traces.len(),
            ..LabelStats::default()
        };
        let mut insights: Vec<Insight> = Vec::new();
        let mut slot: BTreeMap<String, usize> = BTreeMap::new();
        for t in traces {
            let polarity = match t.segment.polarity {
                Some(p) if p.is_polarized() => p,
                _ => {
                    stats.neutral_dropped += 1;
                    continue;
                }
            };
            let Some(topic) = t
                .outcome
                .and_then(|o| o.matched)
                .and_then(|m| self.taxonomy.get(&m.topic_id))
            else {
                stats.no_match_dropped += 1;
                continue;
            };
            match slot.get(&topic.id) {
                Some(&i) => insights[i].verbatims.push(t.segment.text),
                None => {
                    slot.insert(topic.id.clone(), insights.len());
                    insights.push(Insight {
                        topic: TopicRef::of(topic, self.taxonomy.version),
                        subtopic: None,
                        polarity,
                        verbatims: alloc::vec![t.segment.text],
                        provenance: Provenance::Matched,
                    });
                }
            }
        }
        stats.insights = insights.len();
        Ok((
            LabelledRecord {
                review: review.clone(),
                insights,
            },
            stats,
        ))
    }
}

pub fn generate_labelled(reviews: &[Review], net: &SegmentNet<'_>) -> Result<(Vec<LabelledRecord>, LabelStats)> {
    let mut stats = LabelStats::default();
    let mut out = Vec::with_capacity(reviews.len());
    for r in reviews {
        let (rec, s) = net.label(r)?;
        stats += s;
        out.push(rec);
    }
    Ok((out, stats))
}

/// One topic pair, then a polarity and a verbatim pair per insight.
pub fn serialize_training_pairs(rec: &LabelledRecord, tpl: &PromptTemplates) -> Result<Vec<TrainingPair>> {
    tpl.validate()?;
    let review = &rec.review.text;
    let id = &rec.review.id;
    let pair = |prompt, target, phase| TrainingPair {
        prompt,
        target,
        phase,
        review_id: id.clone(),
    };
    let names: Vec<&str> = rec.insights.iter().map(|i| i.topic.name()).collect();
    let mut out = Vec::with_capacity(2 * names.len() + 1);
    out.push(pair(tpl.topic_prompt(review), format_topic_list(&names), Phase::Topic));
    for ins in &rec.insights {
        let name = ins.topic.name();
        out.push(pair(
            tpl.polarity_prompt(review, name),
            ins.polarity.as_str().to_string(),
            Phase::Polarity,
        ));
        out.push(pair(
            tpl.verbatim_prompt(review, name, ins.polarity),
            format_verbatims(&ins.verbatims),
            Phase::Verbatim,
        ));
    }
    Ok(out)
}

/// Seed for one record, independent of processing order.
pub fn record_seed(seed: u64, review_id: &str) -> u64 {
    let mut h = SipHasher13::new_with_keys(seed, 0x5348_5546_464c_4521);
    h.write(review_id.as_bytes());
    h.finish()
}

/// Up to this many sentences every permutation is enumerated.
const ENUMERATE_MAX: usize = 5;

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).unwrap_or(i);
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

fn join(sentences: &[&str], order: &[usize]) -> String {
    let mut s = String::new();
    for (n, &i) in order.iter().enumerate() {
        if n > 0 {
            s.push_str(". ");
        }
        s.push_str(sentences[i]);
    }
    s.push('.');
    s
}

/// Sentence-shuffled copies of `rec` with identical insights. Variants are
/// distinct from each other and from the unshuffled order.
pub fn shuffle_augment(rec: &LabelledRecord, max_variants: usize, seed: u64) -> Vec<LabelledRecord> {
    let sentences: Vec<&str> = rec.review.text.split('.').map(str::trim).filter(|s| !s.is_empty()).collect();
    let n = sentences.len();
    if n < 2 || max_variants == 0 {
        return Vec::new();
    }
    let identity: Vec<usize> = (0..n).collect();
    let original = join(&sentences, &identity);
    let mut rng = ChaCha8Rng::seed_from_u64(record_seed(seed, &rec.review.id));
    let mut seen = BTreeSet::from([original]);
    let mut texts = Vec::new();
    if n <= ENUMERATE_MAX {
        let mut p = identity;
        while next_permutation(&mut p) {
            let t = join(&sentences, &p);
            if seen.insert(t.clone()) {
                texts.push(t);
            }
        }
        texts.shuffle(&mut rng);
        texts.truncate(max_variants);
    } else {
        let mut p = identity;
        for _ in 0..max_variants.saturating_mul(64) {
            if texts.len() == max_variants {
                break;
            }
            p.shuffle(&mut rng);
            let t = join(&sentences, &p);
            if seen.insert(t.clone()) {
                texts.push(t);
            }
        }
    }
    texts
        .into_iter()
        .enumerate()
        .map(|(k, text)| LabelledRecord {
            review: Review {
                id: format!("{}#shuf{}", rec.review.id, k + 1),
                text,
                category: rec.review.category.clone(),
            },
            insights: rec.insights.clone(),
        })
        .collect()
}
