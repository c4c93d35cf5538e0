//! Shared unit-test fixture: the sweater review with a taxonomy, embeddings
//! and sentiment scores that reproduce its published labelling.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::datagen::SegmentNet;
use crate::embedding::{EmbeddingCache, PrecomputedProvider, Similarity};
use crate::matching::MatchConfig;
use crate::model::{GranularTopic, Polarity, Taxonomy};
use crate::segment::SegmenterConfig;
use crate::sentiment::{PrecomputedScores, SentimentConfig};

pub const REVIEW: &str = "Color is GREAT! Have to battle the sleeve tightness. Length is great. \
    Warmth is there. Just very tight in the arm area. Not shoulders but sleeves";

pub struct Fixture {
    pub taxonomy: Taxonomy,
    pub provider: PrecomputedProvider,
    pub scores: PrecomputedScores,
    pub segmenter: SegmenterConfig,
    pub sentiment: SentimentConfig,
    pub matching: MatchConfig,
}

/// Each group shares one axis: a segment, its topic's name and keyword.
const GROUPS: [&[&str]; 5] = [
    &["Color is GREAT", "color", "nice color"],
    &["Length is great", "correct size", "true to size"],
    &["Warmth is there", "warmth", "keeps warm"],
    &["Just very tight in the arm area", "arm fit", "tight arms"],
    &["Have to battle the sleeve tightness", "size smaller than expected", "too short"],
];

impl Fixture {
    pub fn new() -> Self {
        use Polarity::*;
        let taxonomy = Taxonomy::new(
            1,
            vec![
                GranularTopic::l3("color", "color", "design and make", Positive, ["nice color"]),
                GranularTopic::l3("correct size", "size", "design and make", Positive, ["true to size"]),
                GranularTopic::l3("warmth", "warmth", "design and make", Positive, ["keeps warm"]),
                GranularTopic::l3("arm fit", "fit", "design and make", Negative, ["tight arms"]),
                GranularTopic::l3("size smaller than expected", "size", "design and make", Negative, ["too short"]),
            ],
        );
        let mut rows = Vec::new();
        for (axis, g) in GROUPS.iter().enumerate() {
            for t in g.iter() {
                let mut v = vec![0.0; GROUPS.len()];
                v[axis] = 1.0;
                rows.push((t.to_string(), v));
            }
        }
        let scores = PrecomputedScores::new([
            ("Color is GREAT", 0.95, 0.01),
            ("Have to battle the sleeve tightness", 0.05, 0.9),
            ("Length is great", 0.9, 0.02),
            ("Warmth is there", 0.8, 0.1),
            ("Just very tight in the arm area", 0.1, 0.85),
            ("Not shoulders", 0.3, 0.4),
            ("sleeves", 0.2, 0.2),
        ])
        .unwrap();
        Self {
            taxonomy,
            provider: PrecomputedProvider::from_rows(rows).unwrap(),
            scores,
            segmenter: SegmenterConfig::default(),
            sentiment: SentimentConfig::default(),
            matching: MatchConfig::default(),
        }
    }

    pub fn net<'a>(&'a self, cache: &'a EmbeddingCache) -> SegmentNet<'a> {
        SegmentNet {
            taxonomy: &self.taxonomy,
            segmenter: &self.segmenter,
            sentiment: &self.sentiment,
            matching: &self.matching,
            classifier: &self.scores,
            sim: Similarity::new(&self.provider, cache),
        }
    }
}
