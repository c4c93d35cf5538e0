//! Two-head segment sentiment and the neutrality gate.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};

use serde::{Deserialize, Serialize};

use crate::embedding::normalize_key;
use crate::error::{Error, Result};
use crate::model::{Polarity, Segment};

/// Independent positive and negative scores, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scores {
    pub pos: f64,
    pub neg: f64,
}

pub trait SentimentClassifier: Send + Sync {
    fn score(&self, text: &str) -> Result<Scores>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SentimentConfig {
    pub delta_p: f64,
}

impl Default for SentimentConfig {
    fn default() -> Self {
        Self { delta_p: 0.7 }
    }
}

impl SentimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta_p > 0.0 && self.delta_p <= 1.0) {
            return Err(Error::Config {
                field: "sentiment.delta_p".into(),
                message: format!("must be in (0, 1], got {}", self.delta_p),
            });
        }
        Ok(())
    }
}

/// Neutral when both heads are under `delta_p`; otherwise the larger head
/// wins and an exact tie goes to negative.
pub fn polarity_of(scores: Scores, cfg: &SentimentConfig) -> Polarity {
    if scores.pos < cfg.delta_p && scores.neg < cfg.delta_p {
        Polarity::Neutral
    } else if scores.pos > scores.neg {
        Polarity::Positive
    } else {
        Polarity::Negative
    }
}

pub fn classify_segment(
    seg: &Segment,
    clf: &dyn SentimentClassifier,
    cfg: &SentimentConfig,
) -> Result<Segment> {
    let scores = clf.score(&seg.text).map_err(|e| Error::Classifier {
        review_id: seg.review_id.clone(),
        start: seg.char_span.0,
        end: seg.char_span.1,
        message: e.to_string(),
    })?;
    let mut out = seg.clone();
    out.polarity = Some(polarity_of(scores, cfg));
    out.pos_score = Some(scores.pos);
    out.neg_score = Some(scores.neg);
    Ok(out)
}

const NEGATORS: [&str; 3] = ["not", "no", "never"];

/// Token-weight lexicon with single-token negation.
///
/// `p = 1 - exp(-gain * sum of positive weights)` and likewise for `n` with
/// the magnitudes of negative weights. A negator flips the sign of the next
/// token that carries a weight.
#[derive(Debug, Clone)]
pub struct LexiconClassifier {
    weights: BTreeMap<String, f64>,
    gain: f64,
}

impl LexiconClassifier {
    pub fn new<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: AsRef<str>,
    {
        let mut weights = BTreeMap::new();
        for (token, weight) in entries {
            let token = token.as_ref().trim().to_lowercase();
            if token.is_empty() || !(-1.0..=1.0).contains(&weight) {
                return Err(Error::Config {
                    field: "lexicon".into(),
                    message: format!("entry `{token}` needs a non-empty token and weight in [-1, 1], got {weight}"),
                });
            }
            weights.insert(token, weight);
        }
        Ok(Self { weights, gain: 1.0 })
    }

    pub fn with_gain(mut self, gain: f64) -> Result<Self> {
        if !(gain.is_finite() && gain > 0.0) {
            return Err(Error::Config {
                field: "classifier.gain".into(),
                message: format!("must be positive, got {gain}"),
            });
        }
        self.gain = gain;
        Ok(self)
    }
}

fn squash(x: f64, gain: f64) -> f64 {
    1.0 - libm::exp(-gain * x)
}

impl SentimentClassifier for LexiconClassifier {
    fn score(&self, text: &str) -> Result<Scores> {
        let lowered = text.to_lowercase();
        let (mut pos, mut neg) = (0.0, 0.0);
        let mut negate = false;
        for token in lowered
            .split(|c: char| !(c.is_alphanumeric() || c == '\''))
            .filter(|t| !t.is_empty())
        {
            if NEGATORS.contains(&token) {
                negate = true;
                continue;
            }
            if let Some(&w) = self.weights.get(token) {
                let w = if negate { -w } else { w };
                negate = false;
                if w > 0.0 {
                    pos += w;
                } else {
                    neg -= w;
                }
            }
        }
        Ok(Scores {
            pos: squash(pos, self.gain),
            neg: squash(neg, self.gain),
        })
    }
}

/// Replays externally computed `(p, n)` pairs keyed by segment text.
#[derive(Debug, Clone, Default)]
pub struct PrecomputedScores {
    table: BTreeMap<String, Scores>,
}

impl PrecomputedScores {
    pub fn new<I, S>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64, f64)>,
        S: AsRef<str>,
    {
        let mut table = BTreeMap::new();
        for (text, p, n) in rows {
            if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&n) {
                return Err(Error::Config {
                    field: "scores".into(),
                    message: format!("scores for `{}` must be in [0, 1]", text.as_ref()),
                });
            }
            table.insert(normalize_key(text.as_ref()), Scores { pos: p, neg: n });
        }
        Ok(Self { table })
    }
}

impl SentimentClassifier for PrecomputedScores {
    fn score(&self, text: &str) -> Result<Scores> {
        self.table
            .get(&normalize_key(text))
            .copied()
            .ok_or_else(|| Error::LookupMiss { text: text.to_string() })
    }
}
