//! Semi-supervised taxonomy construction.
//!
//! Polarized segments are grouped by threshold clustering, exported to a
//! review file for annotators to merge, name and place in the hierarchy,
//! then imported as L3 topics whose keywords are the member texts. Keyword
//! lists are cleaned within each topic (near-duplicates) and across topics
//! (ambiguous keywords).

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::embedding::{dot, Similarity};
use crate::error::{Error, Result};
use crate::model::{fold_name, GranularTopic, Polarity, Segment, Taxonomy, TopicLevel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    pub sim_threshold: f64,
    pub min_cluster_size: usize,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            sim_threshold: 0.75,
            min_cluster_size: 3,
        }
    }
}

impl ClusterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sim_threshold > 0.0 && self.sim_threshold < 1.0) {
            return Err(Error::Config {
                field: "cluster.sim_threshold".into(),
                message: format!("must be in (0, 1), got {}", self.sim_threshold),
            });
        }
        if self.min_cluster_size < 1 {
            return Err(Error::Config {
                field: "cluster.min_cluster_size".into(),
                message: "must be >= 1".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CleanConfig {
    pub delta_intra: f64,
    pub delta_e: f64,
}

impl Default for CleanConfig {
    fn default() -> Self {
        Self {
            delta_intra: 0.9,
            delta_e: 0.85,
        }
    }
}

impl CleanConfig {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [("clean.delta_intra", self.delta_intra), ("clean.delta_e", self.delta_e)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Config {
                    field: field.into(),
                    message: format!("must be in (0, 1), got {v}"),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub id: String,
    pub polarity: Polarity,
    pub members: Vec<String>,
    pub representative: String,
}

/// Greedy threshold community detection over the segments of `polarity`.
///
/// Every text counts its neighbors (cosine at or above the threshold,
/// itself included). Candidate centers are visited by decreasing neighbor
/// count, ties in input order. An unassigned center claims its unassigned
/// neighbors when there are at least `min_cluster_size` of them. Texts
/// never claimed stay unclustered.
pub fn fast_cluster(
    segments: &[Segment],
    polarity: Polarity,
    cfg: &ClusterConfig,
    sim: &Similarity<'_>,
) -> Result<Vec<Cluster>> {
    let texts: Vec<&str> = segments
        .iter()
        .filter(|s| s.polarity == Some(polarity))
        .map(|s| s.text.as_str())
        .collect();
    let vecs: Vec<Arc<[f64]>> = texts.iter().map(|t| sim.embed(t)).collect::<Result<_>>()?;
    let n = texts.len();
    let mut sims = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let s = dot(&vecs[i], &vecs[j]);
            sims[i * n + j] = s;
            sims[j * n + i] = s;
        }
    }
    let near = |i: usize, j: usize| i == j || sims[i * n + j] >= cfg.sim_threshold;
    let neighbors: Vec<Vec<usize>> = (0..n).map(|i| (0..n).filter(|&j| near(i, j)).collect()).collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| neighbors[b].len().cmp(&neighbors[a].len()));

    let mut assigned = vec![false; n];
    let mut clusters = Vec::new();
    for center in order {
        if assigned[center] {
            continue;
        }
        let group: Vec<usize> = neighbors[center].iter().copied().filter(|&j| !assigned[j]).collect();
        if group.len() < cfg.min_cluster_size {
            continue;
        }
        for &j in &group {
            assigned[j] = true;
        }
        // Representative: highest mean similarity to the other members among
        // members within threshold of everyone (the center always qualifies).
        let mean_sim = |i: usize| {
            if group.len() == 1 {
                1.0
            } else {
                group.iter().filter(|&&j| j != i).map(|&j| sims[i * n + j]).sum::<f64>() / (group.len() - 1) as f64
            }
        };
        let mut rep = center;
        let mut rep_score = mean_sim(center);
        for &i in &group {
            if group.iter().all(|&j| near(i, j)) {
                let s = mean_sim(i);
                if s > rep_score || (s == rep_score && i < rep) {
                    rep = i;
                    rep_score = s;
                }
            }
        }
        clusters.push(Cluster {
            id: format!("{}-{}", polarity.as_str(), clusters.len()),
            polarity,
            members: group.iter().map(|&j| texts[j].to_string()).collect(),
            representative: texts[rep].to_string(),
        });
    }
    Ok(clusters)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewEntry {
    pub cluster_id: String,
    pub polarity: Polarity,
    #[serde(default)]
    pub suggested_name: String,
    pub members: Vec<String>,
    #[serde(default)]
    pub merge_into: Option<String>,
    #[serde(default)]
    pub assigned_hinge: String,
    #[serde(default)]
    pub assigned_coarse: String,
}

/// The annotator round-trip document.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReviewFile {
    pub clusters: Vec<ReviewEntry>,
}

pub fn export_review_file(clusters: &[Cluster]) -> ReviewFile {
    ReviewFile {
        clusters: clusters
            .iter()
            .map(|c| ReviewEntry {
                cluster_id: c.id.clone(),
                polarity: c.polarity,
                suggested_name: String::new(),
                members: c.members.clone(),
                merge_into: None,
                assigned_hinge: String::new(),
                assigned_coarse: String::new(),
            })
            .collect(),
    }
}

/// Builds a version-1 taxonomy from an annotated review file.
///
/// Clusters with `merge_into` fold their members into the chain's final
/// target. Every target needs a name, hinge and coarse topic.
pub fn import_review_file(file: &ReviewFile) -> Result<Taxonomy> {
    let err = |m: String| Err(Error::ReviewFile(m));
    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, e) in file.clusters.iter().enumerate() {
        if index.insert(e.cluster_id.as_str(), i).is_some() {
            return err(format!("duplicate cluster id `{}`", e.cluster_id));
        }
    }

    let mut root_of = vec![0usize; file.clusters.len()];
    for (i, entry) in file.clusters.iter().enumerate() {
        let mut seen = BTreeSet::new();
        let mut cur = i;
        while let Some(target) = &file.clusters[cur].merge_into {
            if !seen.insert(cur) {
                return err(format!("merge cycle through `{}`", entry.cluster_id));
            }
            cur = match index.get(target.as_str()) {
                Some(&t) => t,
                None => return err(format!("`{}` merges into unknown cluster `{target}`", file.clusters[cur].cluster_id)),
            };
        }
        if file.clusters[cur].polarity != entry.polarity {
            return err(format!(
                "`{}` ({}) cannot merge into `{}` ({})",
                entry.cluster_id, entry.polarity, file.clusters[cur].cluster_id, file.clusters[cur].polarity
            ));
        }
        root_of[i] = cur;
    }

    let mut keywords: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (i, entry) in file.clusters.iter().enumerate() {
        let kws = keywords.entry(root_of[i]).or_default();
        for m in &entry.members {
            if !kws.contains(m) {
                kws.push(m.clone());
            }
        }
    }

    let mut hinges: BTreeMap<&str, &str> = BTreeMap::new();
    let mut names: BTreeSet<(String, Polarity)> = BTreeSet::new();
    let mut topics = Vec::new();
    for (i, entry) in file.clusters.iter().enumerate() {
        if root_of[i] != i {
            continue;
        }
        let name = entry.suggested_name.trim();
        let (hinge, coarse) = (entry.assigned_hinge.trim(), entry.assigned_coarse.trim());
        if name.is_empty() || hinge.is_empty() || coarse.is_empty() {
            return err(format!("cluster `{}` needs a name, hinge and coarse topic", entry.cluster_id));
        }
        if let Some(prev) = hinges.insert(hinge, coarse) {
            if prev != coarse {
                return err(format!("hinge `{hinge}` assigned to both `{prev}` and `{coarse}`"));
            }
        }
        if !names.insert((fold_name(name), entry.polarity)) {
            return err(format!("topic ({name}, {}) named twice; use merge_into", entry.polarity));
        }
        topics.push(GranularTopic::l3(
            name,
            hinge,
            coarse,
            entry.polarity,
            keywords.remove(&i).unwrap_or_default(),
        ));
    }
    Ok(Taxonomy::new(1, topics))
}

/// Drops near-duplicate keywords. For every pair `i < j` (input order)
/// whose similarity exceeds `delta_intra`, the later keyword is removed.
pub fn intra_cluster_clean(keywords: &[String], cfg: &CleanConfig, sim: &Similarity<'_>) -> Result<Vec<String>> {
    let vecs: Vec<Arc<[f64]>> = keywords.iter().map(|k| sim.embed(k)).collect::<Result<_>>()?;
    let mut drop = vec![false; keywords.len()];
    for i in 0..keywords.len() {
        for j in i + 1..keywords.len() {
            if dot(&vecs[i], &vecs[j]) > cfg.delta_intra {
                drop[j] = true;
            }
        }
    }
    Ok(keywords
        .iter()
        .zip(drop)
        .filter(|(_, d)| !d)
        .map(|(k, _)| k.clone())
        .collect())
}

/// Removes ambiguous keywords: for every pair of keywords from different
/// topics whose similarity exceeds `delta_e`, both are removed. Pairs are
/// judged on the input lists, so the result is the same whatever the
/// visiting order.
pub fn inter_cluster_clean(
    topic_keywords: &BTreeMap<String, Vec<String>>,
    cfg: &CleanConfig,
    sim: &Similarity<'_>,
) -> Result<BTreeMap<String, Vec<String>>> {
    let mut table: BTreeMap<&str, Arc<[f64]>> = BTreeMap::new();
    for kws in topic_keywords.values() {
        for k in kws {
            if !table.contains_key(k.as_str()) {
                table.insert(k, sim.embed(k)?);
            }
        }
    }
    let lists: Vec<(&String, &Vec<String>)> = topic_keywords.iter().collect();
    let mut doomed: Vec<Vec<bool>> = lists.iter().map(|(_, k)| vec![false; k.len()]).collect();
    for a in 0..lists.len() {
        for b in a + 1..lists.len() {
            for (i, ki) in lists[a].1.iter().enumerate() {
                for (j, kj) in lists[b].1.iter().enumerate() {
                    if dot(&table[ki.as_str()], &table[kj.as_str()]) > cfg.delta_e {
                        doomed[a][i] = true;
                        doomed[b][j] = true;
                    }
                }
            }
        }
    }
    Ok(lists
        .into_iter()
        .zip(doomed)
        .map(|((topic, kws), d)| {
            let kept = kws.iter().zip(d).filter(|(_, x)| !x).map(|(k, _)| k.clone()).collect();
            (topic.clone(), kept)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanSummary {
    pub removed_intra: usize,
    pub removed_inter: usize,
    /// Topics left with no keywords.
    pub emptied: Vec<String>,
}

/// Intra-cluster cleaning per topic, then inter-cluster cleaning across all
/// topics. Returns a new taxonomy with the version bumped.
pub fn clean_taxonomy(taxonomy: &Taxonomy, cfg: &CleanConfig, sim: &Similarity<'_>) -> Result<(Taxonomy, CleanSummary)> {
    let mut removed_intra = 0;
    let mut by_id = BTreeMap::new();
    for t in &taxonomy.topics {
        let kept = intra_cluster_clean(&t.keywords, cfg, sim)?;
        removed_intra += t.keywords.len() - kept.len();
        by_id.insert(t.id.clone(), kept);
    }
    let before: usize = by_id.values().map(Vec::len).sum();
    let after_inter = inter_cluster_clean(&by_id, cfg, sim)?;
    let after: usize = after_inter.values().map(Vec::len).sum();

    let mut out = taxonomy.clone();
    out.version += 1;
    let mut emptied = Vec::new();
    for t in &mut out.topics {
        t.keywords = after_inter.get(&t.id).cloned().unwrap_or_default();
        if t.keywords.is_empty() {
            emptied.push(t.id.clone());
        }
    }
    Ok((
        out,
        CleanSummary {
            removed_intra,
            removed_inter: before - after,
            emptied,
        },
    ))
}

/// Measurable proxies for taxonomy quality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    /// `1 - similar_pairs / l3_pairs`, where a pair is similar when the
    /// cosine of the two L3 names exceeds `delta_e`. 1.0 with no pairs.
    pub exclusivity: f64,
    pub l3_pairs: usize,
    pub similar_pairs: usize,
    pub delta_e: f64,
    /// Number of topics a keyword appears in → number of such keywords.
    pub keyword_overlap: BTreeMap<usize, usize>,
    pub coarse_topics: usize,
    pub hinge_topics: usize,
    pub l3_topics: usize,
    pub l4_topics: usize,
    pub topics_without_keywords: Vec<String>,
}

pub fn taxonomy_quality_report(t: &Taxonomy, cfg: &CleanConfig, sim: &Similarity<'_>) -> Result<QualityReport> {
    let l3: Vec<&GranularTopic> = t.topics.iter().filter(|x| x.level == TopicLevel::L3).collect();
    let mut similar_pairs = 0;
    let mut l3_pairs = 0;
    for i in 0..l3.len() {
        for j in i + 1..l3.len() {
            l3_pairs += 1;
            if sim.sim(&l3[i].name, &l3[j].name)? > cfg.delta_e {
                similar_pairs += 1;
            }
        }
    }
    let exclusivity = if l3_pairs == 0 {
        1.0
    } else {
        1.0 - similar_pairs as f64 / l3_pairs as f64
    };

    let mut occurrences: BTreeMap<String, BTreeSet<&str>> = BTreeMap::new();
    for topic in &t.topics {
        for k in &topic.keywords {
            occurrences.entry(fold_name(k)).or_default().insert(&topic.id);
        }
    }
    let mut keyword_overlap = BTreeMap::new();
    for ids in occurrences.values() {
        *keyword_overlap.entry(ids.len()).or_insert(0) += 1;
    }

    Ok(QualityReport {
        exclusivity,
        l3_pairs,
        similar_pairs,
        delta_e: cfg.delta_e,
        keyword_overlap,
        coarse_topics: t.topics.iter().map(|x| x.coarse.as_str()).collect::<BTreeSet<_>>().len(),
        hinge_topics: t.topics.iter().map(|x| x.hinge.as_str()).collect::<BTreeSet<_>>().len(),
        l3_topics: l3.len(),
        l4_topics: t.topics.len() - l3.len(),
        topics_without_keywords: t.topics.iter().filter(|x| x.keywords.is_empty()).map(|x| x.id.clone()).collect(),
    })
}
