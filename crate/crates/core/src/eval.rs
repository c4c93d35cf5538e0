//! Topic P/R/F1 on (L3 name, polarity) labels, verbatim correctness and
//! completeness, and topic-frequency coverage.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::embedding::Similarity;
use crate::error::{Error, Result};
use crate::model::{LabelledRecord, Polarity};

pub type Label = (String, Polarity);

#[derive(Debug, Clone, PartialEq)]
pub struct EvalPair {
    pub gold: LabelledRecord,
    pub predicted: LabelledRecord,
}

/// Pairs records by review id. A gold review without a prediction is
/// scored against an empty prediction; a prediction without gold, or a
/// repeated id, is an error.
pub fn pair_records(gold: Vec<LabelledRecord>, predicted: Vec<LabelledRecord>) -> Result<Vec<EvalPair>> {
    let mut pred: BTreeMap<String, LabelledRecord> = BTreeMap::new();
    for p in predicted {
        let id = p.review.id.clone();
        if pred.insert(id.clone(), p).is_some() {
            return Err(Error::Eval(format!("duplicate predicted review `{id}`")));
        }
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(gold.len());
    for g in gold {
        if !seen.insert(g.review.id.clone()) {
            return Err(Error::Eval(format!("duplicate gold review `{}`", g.review.id)));
        }
        let predicted = pred.remove(&g.review.id).unwrap_or_else(|| LabelledRecord {
            review: g.review.clone(),
            insights: Vec::new(),
        });
        out.push(EvalPair { gold: g, predicted });
    }
    if let Some(id) = pred.keys().next() {
        return Err(Error::Eval(format!("predicted review `{id}` has no gold record")));
    }
    Ok(out)
}

fn labels(rec: &LabelledRecord) -> BTreeSet<Label> {
    rec.insights.iter().map(|i| i.label()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    Micro,
    Macro,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    num as f64 / den as f64
}

pub fn f1(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

impl Counts {
    /// With nothing predicted, precision is 1 only if nothing was missed;
    /// recall mirrors this. So empty gold and empty prediction score 1.
    pub fn prf(&self) -> Prf {
        let precision = match self.tp + self.fp {
            0 if self.fn_ == 0 => 1.0,
            0 => 0.0,
            d => ratio(self.tp, d),
        };
        let recall = match self.tp + self.fn_ {
            0 if self.fp == 0 => 1.0,
            0 => 0.0,
            d => ratio(self.tp, d),
        };
        Prf {
            precision,
            recall,
            f1: f1(precision, recall),
        }
    }
}

/// Per-label counts over all pairs.
pub fn label_counts(pairs: &[EvalPair]) -> BTreeMap<Label, Counts> {
    let mut out: BTreeMap<Label, Counts> = BTreeMap::new();
    for pair in pairs {
        let (g, p) = (labels(&pair.gold), labels(&pair.predicted));
        for l in g.union(&p) {
            let c = out.entry(l.clone()).or_default();
            match (g.contains(l), p.contains(l)) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                _ => c.fn_ += 1,
            }
        }
    }
    out
}

/// Micro pools counts over every label; macro averages per-label scores over
/// the labels that occur in gold.
pub fn topic_prf(pairs: &[EvalPair], mode: Averaging) -> Prf {
    let per = label_counts(pairs);
    match mode {
        Averaging::Micro => {
            let mut total = Counts::default();
            for c in per.values() {
                total.tp += c.tp;
                total.fp += c.fp;
                total.fn_ += c.fn_;
            }
            total.prf()
        }
        Averaging::Macro => {
            let gold: Vec<Prf> = per.values().filter(|c| c.tp + c.fn_ > 0).map(Counts::prf).collect();
            if gold.is_empty() {
                let any_pred = per.values().any(|c| c.fp > 0);
                let v = if any_pred { 0.0 } else { 1.0 };
                return Prf { precision: v, recall: v, f1: v };
            }
            let n = gold.len() as f64;
            Prf {
                precision: gold.iter().map(|p| p.precision).sum::<f64>() / n,
                recall: gold.iter().map(|p| p.recall).sum::<f64>() / n,
                f1: gold.iter().map(|p| p.f1).sum::<f64>() / n,
            }
        }
    }
}

fn verbatims_by_label(rec: &LabelledRecord) -> BTreeMap<Label, Vec<&str>> {
    let mut out: BTreeMap<Label, Vec<&str>> = BTreeMap::new();
    for i in &rec.insights {
        out.entry(i.label()).or_default().extend(i.verbatims.iter().map(String::as_str));
    }
    out
}

fn coincides(a: &str, b: &str, floor: f64, sim: &Similarity<'_>) -> Result<bool> {
    if a.contains(b) || b.contains(a) {
        return Ok(true);
    }
    Ok(sim.sim(a, b)? >= floor)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerbatimScores {
    pub correctness: f64,
    pub completeness: f64,
    pub predicted: usize,
    pub gold: usize,
}

/// Correctness: share of predicted verbatims with a counterpart among the
/// gold verbatims of the same label. Completeness: the converse. A
/// counterpart is a substring in either direction or a text with
/// similarity at least `sim_floor`.
pub fn verbatim_scores(pairs: &[EvalPair], sim: &Similarity<'_>, sim_floor: f64) -> Result<VerbatimScores> {
    let (mut pred_total, mut pred_ok, mut gold_total, mut gold_ok) = (0usize, 0usize, 0usize, 0usize);
    for pair in pairs {
        let g = verbatims_by_label(&pair.gold);
        let p = verbatims_by_label(&pair.predicted);
        for (label, pv) in &p {
            let gv = g.get(label).map(Vec::as_slice).unwrap_or(&[]);
            for v in pv {
                pred_total += 1;
                if any_coincides(v, gv, sim_floor, sim)? {
                    pred_ok += 1;
                }
            }
        }
        for (label, gv) in &g {
            let pv = p.get(label).map(Vec::as_slice).unwrap_or(&[]);
            for v in gv {
                gold_total += 1;
                if any_coincides(v, pv, sim_floor, sim)? {
                    gold_ok += 1;
                }
            }
        }
    }
    let share = |ok, total, other| match total {
        0 if other == 0 => 1.0,
        0 => 0.0,
        t => ratio(ok, t),
    };
    Ok(VerbatimScores {
        correctness: share(pred_ok, pred_total, gold_total),
        completeness: share(gold_ok, gold_total, pred_total),
        predicted: pred_total,
        gold: gold_total,
    })
}

fn any_coincides(v: &str, others: &[&str], floor: f64, sim: &Similarity<'_>) -> Result<bool> {
    for o in others {
        if coincides(v, o, floor, sim)? {
            return Ok(true);
        }
    }
    Ok(false)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicFrequency {
    pub topic: String,
    pub polarity: Polarity,
    pub count: usize,
    pub cumulative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub mentions: usize,
    pub topics: Vec<TopicFrequency>,
    /// Percent of topics to the share of mentions they cover.
    pub coverage_at: BTreeMap<u32, f64>,
}

pub const COVERAGE_PERCENTS: [u32; 5] = [5, 10, 12, 25, 50];

/// Share of mentions covered by the `ceil(percent * T / 100)` most frequent
/// of the `T` topics.
pub fn coverage_at(topics: &[TopicFrequency], percent: u32) -> f64 {
    let n = (percent as usize * topics.len()).div_ceil(100);
    match n {
        0 => 0.0,
        n => topics[n.min(topics.len()) - 1].cumulative,
    }
}

/// Insight mentions per (topic, polarity), most frequent first with ties in
/// label order.
pub fn topic_distribution(records: &[LabelledRecord]) -> Distribution {
    let mut counts: BTreeMap<Label, usize> = BTreeMap::new();
    for r in records {
        for i in &r.insights {
            *counts.entry(i.label()).or_default() += 1;
        }
    }
    let mentions: usize = counts.values().sum();
    let mut sorted: Vec<(Label, usize)> = counts.into_iter().collect();
    sorted.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let mut run = 0;
    let topics: Vec<TopicFrequency> = sorted
        .into_iter()
        .map(|((topic, polarity), count)| {
            run += count;
            TopicFrequency {
                topic,
                polarity,
                count,
                cumulative: ratio(run, mentions),
            }
        })
        .collect();
    let coverage_at = COVERAGE_PERCENTS.iter().map(|&k| (k, coverage_at(&topics, k))).collect();
    Distribution {
        mentions,
        topics,
        coverage_at,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelScore {
    pub topic: String,
    pub polarity: Polarity,
    pub counts: Counts,
    pub prf: Prf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub reviews: usize,
    pub micro: Prf,
    #[serde(rename = "macro")]
    pub macro_: Prf,
    pub verbatims: VerbatimScores,
    pub sim_floor: f64,
    pub per_label: Vec<LabelScore>,
}

pub fn metric_report(pairs: &[EvalPair], sim: &Similarity<'_>, sim_floor: f64) -> Result<MetricReport> {
    let per_label = label_counts(pairs)
        .into_iter()
        .map(|((topic, polarity), counts)| LabelScore {
            topic,
            polarity,
            counts,
            prf: counts.prf(),
        })
        .collect();
    Ok(MetricReport {
        reviews: pairs.len(),
        micro: topic_prf(pairs, Averaging::Micro),
        macro_: topic_prf(pairs, Averaging::Macro),
        verbatims: verbatim_scores(pairs, sim, sim_floor)?,
        sim_floor,
        per_label,
    })
}
