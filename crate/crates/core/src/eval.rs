//! Edge splits, link scoring and the link-prediction metrics.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::graph::{MultiplexGraph, NodeId, RelationshipId};
use crate::linalg::{dot, Matrix};
use crate::model::{forward_node, sample_node_flows, ModelParams};
use crate::rng::{self, Domain};
use crate::sampler::SamplerConfig;

/// Relationships with fewer edges than this cannot be split.
pub const MIN_EDGES: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitFractions {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions {
            train: 0.85,
            valid: 0.05,
            test: 0.10,
        }
    }
}

impl SplitFractions {
    pub fn validate(&self) -> Result<()> {
        let all = [self.train, self.valid, self.test];
        if all.iter().any(|f| !(0.0..=1.0).contains(f)) || ((all.iter().sum::<f64>()) - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("split fractions {all:?} must be in [0, 1] and sum to 1")));
        }
        Ok(())
    }
}

/// Edges are stored as `(a, b)` pairs; positives have `a < b`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RelationshipSplit {
    pub train: Vec<(NodeId, NodeId)>,
    pub valid: Vec<(NodeId, NodeId)>,
    pub test: Vec<(NodeId, NodeId)>,
    pub valid_neg: Vec<(NodeId, NodeId)>,
    pub test_neg: Vec<(NodeId, NodeId)>,
}

#[derive(Clone, Debug)]
pub struct EdgeSplit {
    /// Same nodes as the source graph, training edges only.
    pub train_graph: MultiplexGraph,
    pub relationships: Vec<RelationshipSplit>,
}

impl EdgeSplit {
    pub fn relationship(&self, r: RelationshipId) -> &RelationshipSplit {
        &self.relationships[r.index()]
    }
}

/// Partitions every relationship's edges into train/valid/test and samples
/// as many non-edges as there are valid and test positives. A negative for
/// the positive `(u, v)` joins a random node of `u`'s type with a random node
/// of `v`'s type and is never an edge under that relationship in `g`.
pub fn split_edges(g: &MultiplexGraph, fractions: SplitFractions, seed: u64) -> Result<EdgeSplit> {
    fractions.validate()?;
    let mut relationships = Vec::with_capacity(g.num_relationships());
    let mut train_edges = Vec::new();
    for r in g.relationships() {
        let mut edges: Vec<(NodeId, NodeId)> = g.edges(r).collect();
        if edges.len() < MIN_EDGES {
            return Err(Error::TooFewEdges {
                relationship: r,
                count: edges.len(),
            });
        }
        edges.shuffle(&mut rng::stream(seed, Domain::Split, r.0 as u64, 0, 0));
        let n = edges.len();
        let n_valid = (fractions.valid * n as f64).round() as usize;
        let n_test = ((fractions.test * n as f64).round() as usize).min(n - n_valid);
        let test = edges.split_off(n - n_test);
        let valid = edges.split_off(n - n_test - n_valid);
        let train = edges;

        let mut taken = HashSet::new();
        let mut rng = rng::stream(seed, Domain::Split, r.0 as u64, 1, 0);
        let valid_neg = sample_non_edges(g, r, &valid, &mut taken, &mut rng)?;
        let test_neg = sample_non_edges(g, r, &test, &mut taken, &mut rng)?;
        train_edges.extend(train.iter().map(|&(a, b)| (r, a, b)));
        relationships.push(RelationshipSplit {
            train,
            valid,
            test,
            valid_neg,
            test_neg,
        });
    }
    Ok(EdgeSplit {
        train_graph: g.with_edges(&train_edges),
        relationships,
    })
}

fn sample_non_edges<R: Rng>(
    g: &MultiplexGraph,
    r: RelationshipId,
    positives: &[(NodeId, NodeId)],
    taken: &mut HashSet<(NodeId, NodeId)>,
    rng: &mut R,
) -> Result<Vec<(NodeId, NodeId)>> {
    let mut out = Vec::with_capacity(positives.len());
    for &(u, v) in positives {
        let left = g.nodes_of_type(g.node_type(u));
        let right = g.nodes_of_type(g.node_type(v));
        let mut found = false;
        for _ in 0..10_000 {
            let a = left[rng.random_range(0..left.len())];
            let b = right[rng.random_range(0..right.len())];
            let key = (a.min(b), a.max(b));
            if a != b && !g.has_edge(r, a, b) && taken.insert(key) {
                out.push((a, b));
                found = true;
                break;
            }
        }
        if !found {
            return Err(Error::Config(format!(
                "could not sample enough non-edges under relationship {}",
                g.relationship_name(r)
            )));
        }
    }
    Ok(out)
}

/// Relationship-specific embeddings `e*_{v,r}`; `per_relationship[r]` is
/// `|V| x d`. Rows of nodes that were not embedded are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Embeddings {
    pub per_relationship: Vec<Matrix>,
}

impl Embeddings {
    pub fn get(&self, v: NodeId, r: RelationshipId) -> &[f64] {
        self.per_relationship[r.index()].row(v.index())
    }

    /// `σ(e*_{u,r} · e*_{v,r})`.
    pub fn score(&self, u: NodeId, v: NodeId, r: RelationshipId) -> f64 {
        sigmoid(dot(self.get(u, r), self.get(v, r)))
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Embeds `nodes` using flows sampled from `g`. Each node's flows come from
/// its own stream, so the result does not depend on which other nodes are
/// embedded alongside it.
pub fn embed_nodes(params: &ModelParams, g: &MultiplexGraph, nodes: &[NodeId], sampler: &SamplerConfig, seed: u64) -> Result<Embeddings> {
    params.check_graph(g)?;
    let rows = nodes
        .par_iter()
        .map(|&v| {
            let mut rng = rng::stream(seed, Domain::EvalFlows, v.0 as u64, 0, 0);
            let flows = sample_node_flows(g, &params.registry, sampler, &params.config.ablation, v, &mut rng)?;
            let fwd = forward_node(params, g, &flows)?;
            Ok(g.relationships().map(|r| fwd.embedding(params, r)).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut per_relationship = vec![Matrix::zeros(g.num_nodes(), params.dims().d); g.num_relationships()];
    for (&v, row) in nodes.iter().zip(rows) {
        for (r, e) in row.into_iter().enumerate() {
            per_relationship[r].row_mut(v.index()).copy_from_slice(&e);
        }
    }
    Ok(Embeddings { per_relationship })
}

pub fn embed_all(params: &ModelParams, g: &MultiplexGraph, sampler: &SamplerConfig, seed: u64) -> Result<Embeddings> {
    let nodes: Vec<NodeId> = g.nodes().collect();
    embed_nodes(params, g, &nodes, sampler, seed)
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    assert_eq!(scores.len(), labels.len());
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1..=j+1 share their average
        let avg = (i + j + 2) as f64 / 2.0;
        rank_sum += avg * order[i..=j].iter().filter(|&&k| labels[k]).count() as f64;
        i = j + 1;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Average precision over a descending sweep; tied scores enter together.
pub fn pr_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    assert_eq!(scores.len(), labels.len());
    let pos = labels.iter().filter(|&&l| l).count();
    if pos == 0 {
        return Err(Error::NoPositives);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut seen, mut ap) = (0usize, 0usize, 0.0);
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let hits = order[i..=j].iter().filter(|&&k| labels[k]).count();
        tp += hits;
        seen += j - i + 1;
        ap += (hits as f64 / pos as f64) * (tp as f64 / seen as f64);
        i = j + 1;
    }
    Ok(ap)
}

fn f1_at(scores: &[f64], labels: &[bool], threshold: f64) -> f64 {
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for (&s, &l) in scores.iter().zip(labels) {
        match (s >= threshold, l) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            _ => {}
        }
    }
    if tp == 0 {
        return 0.0;
    }
    2.0 * tp as f64 / (2 * tp + fp + fneg) as f64
}

/// Picks the threshold (predict positive when `score >= t`) with the best
/// validation F1, preferring the higher threshold on ties, and returns the
/// test F1 at that threshold together with the threshold.
pub fn f1_best_threshold(valid_scores: &[f64], valid_labels: &[bool], test_scores: &[f64], test_labels: &[bool]) -> Result<(f64, f64)> {
    for labels in [valid_labels, test_labels] {
        if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
            return Err(Error::SingleClass);
        }
    }
    let mut candidates = valid_scores.to_vec();
    candidates.sort_by(|a, b| b.total_cmp(a));
    candidates.dedup();
    let mut best = (f64::NEG_INFINITY, candidates[0]);
    for &t in &candidates {
        let f = f1_at(valid_scores, valid_labels, t);
        if f > best.0 {
            best = (f, t);
        }
    }
    Ok((f1_at(test_scores, test_labels, best.1), best.1))
}

/// Ranking metrics of one source node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SourceRanking {
    pub source: NodeId,
    pub hits: usize,
    pub positives: usize,
}

/// Ranks candidates for every endpoint of a test edge under `r`.
/// Candidates are the nodes of the test partners' types, minus the source
/// and its training neighbors; ties go to the smaller node id.
pub fn rank_sources(emb: &Embeddings, split: &EdgeSplit, r: RelationshipId, k: usize) -> Vec<SourceRanking> {
    let g = &split.train_graph;
    let mut partners: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
    for &(a, b) in &split.relationship(r).test {
        partners.entry(a).or_default().insert(b);
        partners.entry(b).or_default().insert(a);
    }
    let partners: Vec<_> = partners.into_iter().collect();
    partners
        .par_iter()
        .map(|(u, positives)| {
            let u = *u;
            let types: BTreeSet<_> = positives.iter().map(|&p| g.node_type(p)).collect();
            let known = g.neighbors(u, r);
            let mut scored: Vec<(f64, NodeId)> = types
                .iter()
                .flat_map(|&t| g.nodes_of_type(t).iter().copied())
                .filter(|&c| c != u && known.binary_search(&c).is_err())
                .map(|c| (emb.score(u, c, r), c))
                .collect();
            scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            let hits = scored.iter().take(k).filter(|(_, c)| positives.contains(c)).count();
            SourceRanking {
                source: u,
                hits,
                positives: positives.len(),
            }
        })
        .collect()
}

/// `(PR@k, HR@k)`: mean per-source precision of the top `k`, and the
/// fraction of (source, test partner) pairs whose partner makes the top `k`.
pub fn topk_from_rankings(rankings: &[SourceRanking], k: usize) -> (f64, f64) {
    if rankings.is_empty() {
        return (0.0, 0.0);
    }
    let pr = rankings.iter().map(|s| s.hits as f64 / k as f64).sum::<f64>() / rankings.len() as f64;
    let total: usize = rankings.iter().map(|s| s.positives).sum();
    let hr = rankings.iter().map(|s| s.hits).sum::<usize>() as f64 / total as f64;
    (pr, hr)
}

pub fn topk_metrics(emb: &Embeddings, split: &EdgeSplit, r: RelationshipId, k: usize) -> (f64, f64) {
    topk_from_rankings(&rank_sources(emb, split, r, k), k)
}

/// Top-K metrics of the sources whose training degree falls in
/// `[lower, upper)` (the last bucket is closed).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeBucket {
    pub lower: f64,
    pub upper: f64,
    pub sources: usize,
    pub pr_at_k: f64,
    pub hr_at_k: f64,
}

pub const DEGREE_BUCKETS: usize = 4;

/// Splits sources into four equal-width buckets of training degree.
pub fn degree_buckets(g: &MultiplexGraph, rankings: &[SourceRanking], k: usize) -> Vec<DegreeBucket> {
    if rankings.is_empty() {
        return Vec::new();
    }
    let degrees: Vec<usize> = rankings.iter().map(|s| g.degree(s.source)).collect();
    let lo = *degrees.iter().min().unwrap() as f64;
    let hi = *degrees.iter().max().unwrap() as f64;
    let width = ((hi - lo) / DEGREE_BUCKETS as f64).max(f64::MIN_POSITIVE);
    let mut groups: Vec<Vec<SourceRanking>> = vec![Vec::new(); DEGREE_BUCKETS];
    for (s, &deg) in rankings.iter().zip(&degrees) {
        let b = (((deg as f64 - lo) / width) as usize).min(DEGREE_BUCKETS - 1);
        groups[b].push(*s);
    }
    groups
        .into_iter()
        .enumerate()
        .map(|(b, members)| {
            let (pr, hr) = topk_from_rankings(&members, k);
            DegreeBucket {
                lower: lo + b as f64 * (hi - lo) / DEGREE_BUCKETS as f64,
                upper: lo + (b + 1) as f64 * (hi - lo) / DEGREE_BUCKETS as f64,
                sources: members.len(),
                pr_at_k: pr,
                hr_at_k: hr,
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkMetrics {
    pub roc_auc: f64,
    pub pr_auc: f64,
    pub f1: f64,
    pub pr_at_k: f64,
    pub hr_at_k: f64,
}

impl LinkMetrics {
    fn mean(all: &[LinkMetrics]) -> LinkMetrics {
        let n = all.len() as f64;
        let avg = |f: fn(&LinkMetrics) -> f64| all.iter().map(f).sum::<f64>() / n;
        LinkMetrics {
            roc_auc: avg(|m| m.roc_auc),
            pr_auc: avg(|m| m.pr_auc),
            f1: avg(|m| m.f1),
            pr_at_k: avg(|m| m.pr_at_k),
            hr_at_k: avg(|m| m.hr_at_k),
        }
    }

    fn to_json(self, k: usize) -> Value {
        json!({
            "roc_auc": self.roc_auc,
            "pr_auc": self.pr_auc,
            "f1": self.f1,
            format!("pr_at_{k}"): self.pr_at_k,
            format!("hr_at_{k}"): self.hr_at_k,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelationshipReport {
    pub name: String,
    pub metrics: LinkMetrics,
    pub f1_threshold: f64,
    pub degree_buckets: Option<Vec<DegreeBucket>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub k: usize,
    pub relationships: Vec<RelationshipReport>,
    pub macro_average: LinkMetrics,
}

impl EvalReport {
    /// Stable-order JSON: one object per relationship name, a `macro`
    /// object, the chosen F1 thresholds and, when computed, degree buckets.
    pub fn to_json(&self) -> Value {
        let mut metrics = Map::new();
        let mut thresholds = Map::new();
        let mut buckets = Map::new();
        for rel in &self.relationships {
            metrics.insert(rel.name.clone(), rel.metrics.to_json(self.k));
            thresholds.insert(rel.name.clone(), json!(rel.f1_threshold));
            if let Some(b) = &rel.degree_buckets {
                buckets.insert(rel.name.clone(), serde_json::to_value(b).expect("buckets serialize"));
            }
        }
        let mut root = Map::new();
        root.insert("relationships".into(), Value::Object(metrics));
        root.insert("macro".into(), self.macro_average.to_json(self.k));
        root.insert("f1_thresholds".into(), Value::Object(thresholds));
        if !buckets.is_empty() {
            root.insert("degree_buckets".into(), Value::Object(buckets));
        }
        Value::Object(root)
    }
}

fn labelled_scores(emb: &Embeddings, r: RelationshipId, pos: &[(NodeId, NodeId)], neg: &[(NodeId, NodeId)]) -> (Vec<f64>, Vec<bool>) {
    let scores = pos.iter().chain(neg).map(|&(a, b)| emb.score(a, b, r)).collect();
    let labels = std::iter::repeat_n(true, pos.len()).chain(std::iter::repeat_n(false, neg.len())).collect();
    (scores, labels)
}

fn split_nodes<'a, I: IntoIterator<Item = &'a (NodeId, NodeId)>>(pairs: I) -> Vec<NodeId> {
    let set: BTreeSet<NodeId> = pairs.into_iter().flat_map(|&(a, b)| [a, b]).collect();
    set.into_iter().collect()
}

/// Macro ROC-AUC over the validation positives and negatives; the early
/// stopping signal.
pub fn validation_roc_auc(params: &ModelParams, g: &MultiplexGraph, split: &EdgeSplit, sampler: &SamplerConfig, seed: u64) -> Result<f64> {
    let nodes = split_nodes(split.relationships.iter().flat_map(|s| s.valid.iter().chain(&s.valid_neg)));
    let emb = embed_nodes(params, g, &nodes, sampler, seed)?;
    let mut total = 0.0;
    for r in g.relationships() {
        let s = split.relationship(r);
        let (scores, labels) = labelled_scores(&emb, r, &s.valid, &s.valid_neg);
        total += roc_auc(&scores, &labels)?;
    }
    Ok(total / g.num_relationships() as f64)
}

/// Scores the test split with embeddings computed on the training graph.
pub fn evaluate(params: &ModelParams, split: &EdgeSplit, sampler: &SamplerConfig, seed: u64, k: usize, by_degree: bool) -> Result<EvalReport> {
    let g = &split.train_graph;
    let emb = embed_all(params, g, sampler, seed)?;
    let mut relationships = Vec::new();
    for r in g.relationships() {
        let s = split.relationship(r);
        let (test_scores, test_labels) = labelled_scores(&emb, r, &s.test, &s.test_neg);
        let (valid_scores, valid_labels) = labelled_scores(&emb, r, &s.valid, &s.valid_neg);
        let (f1, threshold) = f1_best_threshold(&valid_scores, &valid_labels, &test_scores, &test_labels)?;
        let rankings = rank_sources(&emb, split, r, k);
        let (pr_at_k, hr_at_k) = topk_from_rankings(&rankings, k);
        relationships.push(RelationshipReport {
            name: g.relationship_name(r).to_string(),
            metrics: LinkMetrics {
                roc_auc: roc_auc(&test_scores, &test_labels)?,
                pr_auc: pr_auc(&test_scores, &test_labels)?,
                f1,
                pr_at_k,
                hr_at_k,
            },
            f1_threshold: threshold,
            degree_buckets: by_degree.then(|| degree_buckets(g, &rankings, k)),
        });
    }
    let macro_average = LinkMetrics::mean(&relationships.iter().map(|r| r.metrics).collect::<Vec<_>>());
    Ok(EvalReport {
        k,
        relationships,
        macro_average,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn roc_auc_examples() {
        assert!(close(roc_auc(&[0.9, 0.8, 0.3, 0.1], &[true, false, true, false]).unwrap(), 0.75));
        assert!(close(roc_auc(&[0.9, 0.8, 0.2, 0.1], &[true, true, false, false]).unwrap(), 1.0));
        assert!(close(roc_auc(&[0.4; 6], &[true, false, true, false, false, true]).unwrap(), 0.5));
        assert!(matches!(roc_auc(&[0.1, 0.2], &[true, true]), Err(Error::SingleClass)));
    }

    #[test]
    fn pr_auc_examples() {
        assert!(close(pr_auc(&[0.9, 0.8, 0.3], &[true, false, true]).unwrap(), 0.5 * (1.0 + 2.0 / 3.0)));
        assert!(close(pr_auc(&[0.9, 0.8, 0.2, 0.1], &[true, true, false, false]).unwrap(), 1.0));
        assert!(close(pr_auc(&[0.9, 0.8, 0.7, 0.1], &[false, false, false, true]).unwrap(), 0.25));
        assert!(matches!(pr_auc(&[0.1], &[false]), Err(Error::NoPositives)));
    }

    #[test]
    fn f1_examples() {
        let (f1, _) = f1_best_threshold(&[0.9, 0.1], &[true, false], &[0.95, 0.92, 0.2, 0.3], &[true, true, false, false]).unwrap();
        assert!(close(f1, 1.0));
        // every test score clears the chosen threshold, half are positive
        let (f1, t) = f1_best_threshold(&[0.5, 0.4], &[true, false], &[0.9, 0.8, 0.7, 0.6], &[true, false, true, false]).unwrap();
        assert_eq!(t, 0.5);
        assert!(close(f1, 2.0 / 3.0));
        let (_, t) = f1_best_threshold(&[0.3, 0.3], &[true, false], &[0.2, 0.4], &[true, false]).unwrap();
        assert_eq!(t, 0.3);
        assert!(matches!(f1_best_threshold(&[0.3], &[true], &[0.2, 0.4], &[true, false]), Err(Error::SingleClass)));
    }

    #[test]
    fn f1_ties_prefer_higher_threshold() {
        // thresholds 0.9 and 0.6 both give F1 2/3 on validation
        let (_, t) = f1_best_threshold(&[0.9, 0.8, 0.7, 0.6], &[true, false, false, true], &[0.9, 0.1], &[true, false]).unwrap();
        assert_eq!(t, 0.9);
    }

    #[test]
    fn topk_from_rankings_averages() {
        let r = [
            SourceRanking { source: NodeId(0), hits: 1, positives: 1 },
            SourceRanking { source: NodeId(1), hits: 0, positives: 3 },
        ];
        let (pr, hr) = topk_from_rankings(&r, 10);
        assert!(close(pr, 0.05));
        assert!(close(hr, 0.25));
    }
}
