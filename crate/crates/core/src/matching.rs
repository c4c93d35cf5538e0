//! Three-signal topic matching for polarized segments.
//!
//! Every candidate topic gets three scores against the segment: similarity
//! to the topic name, mean of the `k` best keyword similarities, and mean
//! similarity over all keywords. The best topic per signal, plus the best
//! mean of the three, feed a fixed rule cascade: high confidence first,
//! then two-signal agreement, then best average, else no match.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::embedding::Similarity;
use crate::error::{Error, Result};
use crate::model::{GranularTopic, Segment, Taxonomy};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchConfig {
    pub k: usize,
    pub delta_h: f64,
    pub delta_m: f64,
    pub delta_avg: f64,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            k: 5,
            delta_h: 0.8,
            delta_m: 0.3,
            delta_avg: 0.5,
        }
    }
}

impl MatchConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, message: String| {
            Err(Error::Config {
                field: format!("matching.{field}"),
                message,
            })
        };
        if self.k < 1 {
            return bad("k", "must be >= 1".into());
        }
        if !(self.delta_h > 0.0 && self.delta_h <= 1.0) {
            return bad("delta_h", format!("must be in (0, 1], got {}", self.delta_h));
        }
        if !(self.delta_m > 0.0 && self.delta_m <= self.delta_h) {
            return bad("delta_m", format!("must be in (0, delta_h], got {}", self.delta_m));
        }
        if !self.delta_avg.is_finite() {
            return bad("delta_avg", "must be finite".into());
        }
        Ok(())
    }
}

/// A topic and the score that made it the leader of one signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalResult {
    pub topic_id: String,
    pub topic_name: String,
    pub score: f64,
}

impl SignalResult {
    fn of(topic: &GranularTopic, score: f64) -> Self {
        Self {
            topic_id: topic.id.clone(),
            topic_name: topic.name.clone(),
            score,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RuleFired {
    #[serde(rename = "HighConf_tkw")]
    HighConfTopK,
    #[serde(rename = "HighConf_n")]
    HighConfName,
    #[serde(rename = "HighConf_mkw")]
    HighConfMean,
    #[serde(rename = "Majority_tkw_n")]
    MajorityTopKName,
    #[serde(rename = "Majority_mkw_tkw")]
    MajorityMeanTopK,
    #[serde(rename = "Majority_n_mkw")]
    MajorityNameMean,
    BestAverage,
    NoMatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signals {
    pub name: SignalResult,
    pub top_k: SignalResult,
    pub mean: SignalResult,
    pub average: SignalResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchOutcome {
    pub matched: Option<SignalResult>,
    pub rule_fired: RuleFired,
    pub signals: Signals,
}

/// Index and value of the maximum score; ties go to the lowest index.
pub fn argmax(scores: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &s) in scores.iter().enumerate() {
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    best
}

pub fn best_topic_and_score(topics: &[&GranularTopic], scores: &[f64]) -> Result<SignalResult> {
    if topics.len() != scores.len() {
        return Err(Error::LengthMismatch {
            topics: topics.len(),
            scores: scores.len(),
        });
    }
    let (i, s) = argmax(scores).ok_or(Error::NoCandidates)?;
    Ok(SignalResult::of(topics[i], s))
}

fn keyword_sims(text: &str, topic: &GranularTopic, sim: &Similarity<'_>) -> Result<Vec<f64>> {
    if topic.keywords.is_empty() {
        return Err(Error::NoKeywords {
            topic: topic.id.clone(),
        });
    }
    topic.keywords.iter().map(|k| sim.sim(text, k)).collect()
}

/// Mean of the `k` largest values; divides by `min(k, len)`.
fn top_k_mean(mut sims: Vec<f64>, k: usize) -> f64 {
    sims.sort_by(|a, b| b.total_cmp(a));
    let n = k.min(sims.len());
    sims[..n].iter().sum::<f64>() / n as f64
}

fn mean(sims: &[f64]) -> f64 {
    sims.iter().sum::<f64>() / sims.len() as f64
}

fn nonempty(topics: &[&GranularTopic]) -> Result<()> {
    if topics.is_empty() {
        Err(Error::NoCandidates)
    } else {
        Ok(())
    }
}

pub fn signal_name(seg: &Segment, topics: &[&GranularTopic], sim: &Similarity<'_>) -> Result<SignalResult> {
    nonempty(topics)?;
    let scores = topics
        .iter()
        .map(|t| sim.sim(&seg.text, &t.name))
        .collect::<Result<Vec<_>>>()?;
    best_topic_and_score(topics, &scores)
}

pub fn signal_topk_keywords(
    seg: &Segment,
    topics: &[&GranularTopic],
    sim: &Similarity<'_>,
    k: usize,
) -> Result<SignalResult> {
    nonempty(topics)?;
    let scores = topics
        .iter()
        .map(|t| keyword_sims(&seg.text, t, sim).map(|s| top_k_mean(s, k)))
        .collect::<Result<Vec<_>>>()?;
    best_topic_and_score(topics, &scores)
}

pub fn signal_mean_keywords(seg: &Segment, topics: &[&GranularTopic], sim: &Similarity<'_>) -> Result<SignalResult> {
    nonempty(topics)?;
    let scores = topics
        .iter()
        .map(|t| keyword_sims(&seg.text, t, sim).map(|s| mean(&s)))
        .collect::<Result<Vec<_>>>()?;
    best_topic_and_score(topics, &scores)
}

/// Computes the four signals of `text` over `topics`.
pub fn compute_signals(
    text: &str,
    topics: &[&GranularTopic],
    cfg: &MatchConfig,
    sim: &Similarity<'_>,
) -> Result<Signals> {
    nonempty(topics)?;
    let n = topics.len();
    let (mut by_name, mut by_top_k, mut by_mean, mut by_avg) =
        (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for topic in topics {
        let name = sim.sim(text, &topic.name)?;
        let kw = keyword_sims(text, topic, sim)?;
        let m = mean(&kw);
        let tk = top_k_mean(kw, cfg.k);
        by_name.push(name);
        by_top_k.push(tk);
        by_mean.push(m);
        by_avg.push((name + tk + m) / 3.0);
    }
    Ok(Signals {
        name: best_topic_and_score(topics, &by_name)?,
        top_k: best_topic_and_score(topics, &by_top_k)?,
        mean: best_topic_and_score(topics, &by_mean)?,
        average: best_topic_and_score(topics, &by_avg)?,
    })
}

/// The rule cascade, in order. Returns the rule and the winning signal.
pub fn decide<'s>(s: &'s Signals, cfg: &MatchConfig) -> (RuleFired, Option<&'s SignalResult>) {
    let (n, tk, m) = (&s.name, &s.top_k, &s.mean);
    let agree = |a: &SignalResult, b: &SignalResult| a.topic_id == b.topic_id && a.score + b.score >= 2.0 * cfg.delta_m;
    if tk.score >= cfg.delta_h {
        (RuleFired::HighConfTopK, Some(tk))
    } else if n.score >= cfg.delta_h {
        (RuleFired::HighConfName, Some(n))
    } else if m.score >= cfg.delta_h {
        (RuleFired::HighConfMean, Some(m))
    } else if agree(tk, n) {
        (RuleFired::MajorityTopKName, Some(tk))
    } else if agree(m, tk) {
        (RuleFired::MajorityMeanTopK, Some(m))
    } else if agree(n, m) {
        (RuleFired::MajorityNameMean, Some(n))
    } else if s.average.score >= cfg.delta_avg {
        (RuleFired::BestAverage, Some(&s.average))
    } else {
        (RuleFired::NoMatch, None)
    }
}

/// Matches `text` against an explicit candidate list.
pub fn match_candidates(
    text: &str,
    topics: &[&GranularTopic],
    cfg: &MatchConfig,
    sim: &Similarity<'_>,
) -> Result<MatchOutcome> {
    let signals = compute_signals(text, topics, cfg, sim)?;
    let (rule_fired, winner) = decide(&signals, cfg);
    Ok(MatchOutcome {
        matched: winner.cloned(),
        rule_fired,
        signals,
    })
}

/// Matches a polarized segment against the L3 topics of its polarity.
pub fn match_topic(seg: &Segment, taxonomy: &Taxonomy, cfg: &MatchConfig, sim: &Similarity<'_>) -> Result<MatchOutcome> {
    let polarity = seg
        .polarity
        .filter(|p| p.is_polarized())
        .ok_or_else(|| Error::Unpolarized {
            review_id: seg.review_id.clone(),
        })?;
    match_candidates(&seg.text, &taxonomy.l3_of(polarity), cfg, sim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{EmbeddingCache, HashingProvider, PrecomputedProvider};
    use crate::model::Polarity;
    use alloc::string::ToString;
    use alloc::vec;
    use alloc::vec::Vec;

    fn topic(name: &str, kws: &[&str]) -> GranularTopic {
        GranularTopic::l3(name, "h", "c", Polarity::Negative, kws.iter().copied())
    }

    fn seg(text: &str) -> Segment {
        Segment::new("r", text, (0, text.len())).with_polarity(Polarity::Negative)
    }

    /// Texts whose cosine with the unit vector `e0` is fixed: each text gets
    /// `c * e0 + sqrt(1 - c^2) * e_i` on its own axis.
    fn controlled(segment: &str, rows: &[(&str, f64)]) -> PrecomputedProvider {
        let dim = rows.len() + 1;
        let mut all = vec![(segment.to_string(), {
            let mut v = vec![0.0; dim];
            v[0] = 1.0;
            v
        })];
        for (i, (text, c)) in rows.iter().enumerate() {
            let mut v = vec![0.0; dim];
            v[0] = *c;
            v[i + 1] = libm::sqrt(1.0 - c * c);
            all.push((text.to_string(), v));
        }
        PrecomputedProvider::from_rows(all).unwrap()
    }

    #[test]
    fn argmax_ties_and_singletons() {
        let (a, b, c) = (topic("a", &["x"]), topic("b", &["x"]), topic("c", &["x"]));
        let r = best_topic_and_score(&[&a, &b, &c], &[0.2, 0.9, 0.5]).unwrap();
        assert_eq!((r.topic_name.as_str(), r.score), ("b", 0.9));
        let r = best_topic_and_score(&[&a, &b], &[0.4, 0.4]).unwrap();
        assert_eq!(r.topic_name, "a");
        let r = best_topic_and_score(&[&a], &[0.1]).unwrap();
        assert_eq!((r.topic_name.as_str(), r.score), ("a", 0.1));
        assert_eq!(best_topic_and_score(&[], &[]), Err(Error::NoCandidates));
        assert!(matches!(best_topic_and_score(&[&a], &[0.1, 0.2]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn name_signal_exact_text_scores_one() {
        let p = HashingProvider::new(128, 1).unwrap();
        let c = EmbeddingCache::new();
        let sim = Similarity::new(&p, &c);
        let (a, b) = (topic("zipper quality", &["x"]), topic("package damaged", &["y"]));
        let r = signal_name(&seg("zipper quality"), &[&a, &b], &sim).unwrap();
        assert_eq!(r.topic_name, "zipper quality");
        assert!((r.score - 1.0).abs() < 1e-9);
        // Winner agrees with direct pairwise cosine.
        let s = seg("the zipper sticks");
        let r = signal_name(&s, &[&a, &b], &sim).unwrap();
        let da = sim.sim(&s.text, "zipper quality").unwrap();
        let db = sim.sim(&s.text, "package damaged").unwrap();
        assert_eq!(r.topic_name, if da >= db { "zipper quality" } else { "package damaged" });
        assert!(signal_name(&s, &[], &sim).is_err());
    }

    #[test]
    fn top_k_averages_only_the_best_five() {
        let sims = [0.9, 0.1, 0.8, 0.7, 0.2, 0.6, 0.5];
        let rows: Vec<(String, f64)> = sims.iter().enumerate().map(|(i, &c)| (alloc::format!("kw{i}"), c)).collect();
        let rows_ref: Vec<(&str, f64)> = rows.iter().map(|(t, c)| (t.as_str(), *c)).collect();
        let p = controlled("seg", &rows_ref);
        let c = EmbeddingCache::new();
        let sim = Similarity::new(&p, &c);
        let kws: Vec<&str> = rows.iter().map(|(t, _)| t.as_str()).collect();
        let t = topic("t", &kws);
        let r = signal_topk_keywords(&seg("seg"), &[&t], &sim, 5).unwrap();
        // Brute force: sorted desc 0.9 0.8 0.7 0.6 0.5 -> mean 0.7
        assert!((r.score - 0.7).abs() < 1e-12, "{}", r.score);
        let r = signal_mean_keywords(&seg("seg"), &[&t], &sim).unwrap();
        assert!((r.score - 3.8 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn top_k_with_fewer_keywords_divides_by_count() {
        let p = controlled("seg", &[("only", 1.0)]);
        let c = EmbeddingCache::new();
        let sim = Similarity::new(&p, &c);
        let t = topic("t", &["only"]);
        let r = signal_topk_keywords(&seg("seg"), &[&t], &sim, 5).unwrap();
        assert!((r.score - 1.0).abs() < 1e-12);
    }

    #[test]
    fn keywordless_topic_is_an_error() {
        let p = HashingProvider::new(64, 1).unwrap();
        let c = EmbeddingCache::new();
        let sim = Similarity::new(&p, &c);
        let t = topic("t", &[]);
        assert_eq!(
            signal_mean_keywords(&seg("abc"), &[&t], &sim),
            Err(Error::NoKeywords { topic: t.id.clone() })
        );
    }

    fn outcome(rows: &[(&str, f64)], topics: &[GranularTopic]) -> MatchOutcome {
        let p = controlled("seg", rows);
        let c = EmbeddingCache::new();
        let sim = Similarity::new(&p, &c);
        let refs: Vec<&GranularTopic> = topics.iter().collect();
        match_candidates("seg", &refs, &MatchConfig::default(), &sim).unwrap()
    }

    #[test]
    fn high_confidence_keywords_win_first() {
        let topics = [topic("x", &["x1"]), topic("y", &["y1"])];
        let o = outcome(&[("x", 0.1), ("x1", 0.85), ("y", 0.79), ("y1", 0.2)], &topics);
        assert_eq!(o.rule_fired, RuleFired::HighConfTopK);
        assert_eq!(o.matched.unwrap().topic_name, "x");
    }

    #[test]
    fn agreement_below_high_confidence() {
        // name 0.35, keyword 0.40 on X: top-k and name agree, 0.75 >= 0.6
        let topics = [topic("x", &["x1"]), topic("y", &["y1"])];
        let o = outcome(&[("x", 0.35), ("x1", 0.40), ("y", 0.1), ("y1", 0.1)], &topics);
        assert_eq!(o.rule_fired, RuleFired::MajorityTopKName);
        assert_eq!(o.matched.unwrap().topic_name, "x");
    }

    #[test]
    fn weak_scattered_signals_do_not_match() {
        let topics = [topic("x", &["x1", "x2"]), topic("y", &["y1"])];
        let o = outcome(&[("x", 0.1), ("x1", 0.1), ("x2", 0.1), ("y", 0.1), ("y1", 0.1)], &topics);
        assert_eq!(o.rule_fired, RuleFired::NoMatch);
        assert!(o.matched.is_none());
    }

    #[test]
    fn polarity_isolation() {
        let p = HashingProvider::new(64, 3).unwrap();
        let c = EmbeddingCache::new();
        let sim = Similarity::new(&p, &c);
        let tax = Taxonomy::new(
            1,
            vec![
                GranularTopic::l3("zipper quality", "material", "specs", Polarity::Negative, ["zipper sticks"]),
                GranularTopic::l3("easy zipping", "material", "specs", Polarity::Positive, ["zips easily"]),
            ],
        );
        let s = Segment::new("r", "zipper sticks", (0, 13)).with_polarity(Polarity::Positive);
        let o = match_topic(&s, &tax, &MatchConfig::default(), &sim).unwrap();
        assert_eq!(o.signals.name.topic_name, "easy zipping");
        let neutral = Segment::new("r", "zipper sticks", (0, 13)).with_polarity(Polarity::Neutral);
        assert!(matches!(match_topic(&neutral, &tax, &MatchConfig::default(), &sim), Err(Error::Unpolarized { .. })));
    }

    #[test]
    fn config_validation() {
        assert!(MatchConfig::default().validate().is_ok());
        assert!(MatchConfig { k: 0, ..Default::default() }.validate().is_err());
        assert!(MatchConfig { delta_m: 0.9, ..Default::default() }.validate().is_err());
        assert!(MatchConfig { delta_h: 1.2, ..Default::default() }.validate().is_err());
    }
}
