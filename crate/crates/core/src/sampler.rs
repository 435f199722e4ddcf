//! Stochastic procedures over an immutable graph: typed training walks,
//! skip-gram context pairs, metapath-guided neighbor layers, randomized
//! inter-relationship exploration and heterogeneous negative sampling.
//!
//! Layer sampling is with replacement and fixed fanout, so every flow of a
//! node has the same rectangular shape. When a legal neighbor set is empty
//! the parent is repeated in its place and marked as backfilled; backfilled
//! entries only ever expand to further copies of themselves.

use std::collections::BTreeSet;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{MetapathScheme, MultiplexGraph, NodeId, RelationshipId};
use crate::rng::{self, Domain};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    /// Walks started from every eligible node.
    pub num_walks: usize,
    /// Maximum number of nodes in a walk.
    pub walk_length: usize,
    /// Skip-gram window radius.
    pub window: usize,
    /// Samples drawn per parent at each layer; the last entry repeats for
    /// deeper layers.
    pub fanout: Vec<usize>,
    /// Depth of the randomized exploration flow.
    pub exploration_depth: usize,
    /// Negatives drawn per context pair.
    pub negatives: usize,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            num_walks: 20,
            walk_length: 10,
            window: 5,
            fanout: vec![10, 10],
            exploration_depth: 2,
            negatives: 5,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("num_walks", self.num_walks),
            ("walk_length", self.walk_length),
            ("window", self.window),
            ("exploration_depth", self.exploration_depth),
            ("negatives", self.negatives),
        ];
        for (name, value) in positive {
            if value == 0 {
                return Err(Error::Config(format!("sampler.{name} must be positive")));
            }
        }
        if self.fanout.is_empty() || self.fanout.contains(&0) {
            return Err(Error::Config("sampler.fanout must be a non-empty list of positive counts".into()));
        }
        if self.window >= self.walk_length {
            return Err(Error::Config("sampler.window must be smaller than sampler.walk_length".into()));
        }
        Ok(())
    }

    /// Fanout used at 1-based step `k`.
    pub fn fanout_at(&self, k: usize) -> usize {
        fanout_at(&self.fanout, k)
    }
}

fn fanout_at(fanout: &[usize], k: usize) -> usize {
    fanout[(k - 1).min(fanout.len() - 1)]
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Walk {
    pub relationship: RelationshipId,
    pub nodes: Vec<NodeId>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ContextPair {
    pub center: NodeId,
    pub context: NodeId,
    pub relationship: RelationshipId,
}

fn scheme_key(scheme: &MetapathScheme) -> u64 {
    // FNV-1a over the scheme's ids.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let words = scheme
        .node_types()
        .iter()
        .map(|t| t.0 as u64)
        .chain(scheme.relationships().iter().map(|r| 0x1_0000 + r.0 as u64));
    for w in words {
        h ^= w;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Metapath-constrained walks under relationship `r`.
///
/// `scheme` must be intra-relationship under `r` and cyclic (first and last
/// node types equal); its node types are repeated along the walk. From each
/// node of the start type, `num_walks` walks of at most `walk_length` nodes
/// are drawn. Each step is uniform over the neighbors under `r` that carry
/// the next required type; a walk stops early when there are none.
pub fn training_walks(
    g: &MultiplexGraph,
    r: RelationshipId,
    scheme: &MetapathScheme,
    cfg: &SamplerConfig,
) -> Result<Vec<Walk>> {
    if !scheme.is_intra() || scheme.relationships()[0] != r {
        return Err(Error::InvalidScheme(
            "walk schemes must use only the walked relationship".into(),
        ));
    }
    if !scheme.is_cyclic() {
        return Err(Error::InvalidScheme(
            "walk schemes must start and end at the same node type".into(),
        ));
    }
    let starts = g.nodes_of_type(scheme.start_type());
    if starts.is_empty() {
        return Err(Error::NoValidStartNodes);
    }
    let pattern = &scheme.node_types()[..scheme.len()];
    let key = scheme_key(scheme);
    let per_node: Vec<Vec<Walk>> = starts
        .par_iter()
        .map(|&start| {
            (0..cfg.num_walks)
                .map(|w| {
                    let mut rng = rng::stream(cfg.seed, Domain::Walk, key, start.0 as u64, w as u64);
                    let mut nodes = Vec::with_capacity(cfg.walk_length);
                    nodes.push(start);
                    let mut current = start;
                    for t in 1..cfg.walk_length {
                        let want = pattern[t % pattern.len()];
                        let candidates = g.neighbors(current, r);
                        let count = candidates.iter().filter(|&&n| g.node_type(n) == want).count();
                        if count == 0 {
                            break;
                        }
                        let pick = rng.random_range(0..count);
                        current = *candidates
                            .iter()
                            .filter(|&&n| g.node_type(n) == want)
                            .nth(pick)
                            .unwrap();
                        nodes.push(current);
                    }
                    Walk { relationship: r, nodes }
                })
                .collect()
        })
        .collect();
    Ok(per_node.into_iter().flatten().collect())
}

/// Type-agnostic walks under `r` from every node, for relationships that
/// have no usable walk scheme.
pub fn relationship_walks(g: &MultiplexGraph, r: RelationshipId, cfg: &SamplerConfig) -> Vec<Walk> {
    let key = 0xFFFF_0000 + r.0 as u64;
    let per_node: Vec<Vec<Walk>> = g
        .nodes()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&start| {
            (0..cfg.num_walks)
                .map(|w| {
                    let mut rng = rng::stream(cfg.seed, Domain::Walk, key, start.0 as u64, w as u64);
                    let mut nodes = vec![start];
                    let mut current = start;
                    for _ in 1..cfg.walk_length {
                        let candidates = g.neighbors(current, r);
                        if candidates.is_empty() {
                            break;
                        }
                        current = candidates[rng.random_range(0..candidates.len())];
                        nodes.push(current);
                    }
                    Walk { relationship: r, nodes }
                })
                .collect()
        })
        .collect();
    per_node.into_iter().flatten().collect()
}

/// Skip-gram pairs: every position paired with every other position at most
/// `window` steps away. Pairs whose two ends are the same node are skipped.
pub fn context_pairs<'a, I>(walks: I, window: usize) -> Vec<ContextPair>
where
    I: IntoIterator<Item = &'a Walk>,
{
    let mut pairs = Vec::new();
    for walk in walks {
        let nodes = &walk.nodes;
        for (i, &center) in nodes.iter().enumerate() {
            let lo = i.saturating_sub(window);
            let hi = (i + window).min(nodes.len().saturating_sub(1));
            for (k, &context) in nodes.iter().enumerate().take(hi + 1).skip(lo) {
                if k != i && context != center {
                    pairs.push(ContextPair {
                        center,
                        context,
                        relationship: walk.relationship,
                    });
                }
            }
        }
    }
    pairs
}

/// Identifies the aggregation flow a set of layers belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FlowTag {
    /// Index into the model's scheme registry.
    Scheme(usize),
    Random,
}

/// Sampled neighbor layers `L_0 .. L_K` of one node for one flow.
///
/// `L_0 = [origin]` and layer `k` holds `fanout(k)` consecutive children for
/// every entry of layer `k - 1`: the children of entry `i` are the entries
/// `i * fanout(k) .. (i + 1) * fanout(k)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NeighborLayers {
    pub origin: NodeId,
    pub tag: FlowTag,
    pub layers: Vec<Vec<NodeId>>,
    /// Parallel to `layers`; true where the entry is a repeated parent.
    pub backfilled: Vec<Vec<bool>>,
}

impl NeighborLayers {
    fn root(origin: NodeId, tag: FlowTag) -> Self {
        NeighborLayers {
            origin,
            tag,
            layers: vec![vec![origin]],
            backfilled: vec![vec![false]],
        }
    }

    /// Number of aggregation steps `K`.
    pub fn depth(&self) -> usize {
        self.layers.len() - 1
    }

    /// Children per parent at 1-based step `k`.
    pub fn fanout(&self, k: usize) -> usize {
        self.layers[k].len() / self.layers[k - 1].len()
    }

    /// Distinct non-backfilled nodes of layer `k`.
    pub fn support(&self, k: usize) -> BTreeSet<NodeId> {
        self.layers[k]
            .iter()
            .zip(&self.backfilled[k])
            .filter(|(_, &b)| !b)
            .map(|(&n, _)| n)
            .collect()
    }

    /// Every node that appears in any layer.
    pub fn receptive_field(&self) -> BTreeSet<NodeId> {
        self.layers.iter().flatten().copied().collect()
    }

    fn expand<R: Rng>(&mut self, fanout: usize, rng: &mut R, mut draw: impl FnMut(NodeId, &mut R) -> Option<NodeId>) {
        let parents = self.layers.last().unwrap();
        let parent_fill = self.backfilled.last().unwrap();
        let mut layer = Vec::with_capacity(parents.len() * fanout);
        let mut fill = Vec::with_capacity(parents.len() * fanout);
        for (&p, &p_fill) in parents.iter().zip(parent_fill) {
            for _ in 0..fanout {
                let next = if p_fill { None } else { draw(p, rng) };
                match next {
                    Some(n) => {
                        layer.push(n);
                        fill.push(false);
                    }
                    None => {
                        layer.push(p);
                        fill.push(true);
                    }
                }
            }
        }
        self.layers.push(layer);
        self.backfilled.push(fill);
    }
}

/// Layers that follow `scheme` step by step from `v`: layer `k` draws,
/// for every entry of layer `k - 1`, uniformly from its neighbors under
/// `r_k` of type `o_k`.
pub fn metapath_guided_layers<R: Rng>(
    g: &MultiplexGraph,
    v: NodeId,
    scheme: &MetapathScheme,
    fanout: &[usize],
    tag: FlowTag,
    rng: &mut R,
) -> Result<NeighborLayers> {
    if fanout.is_empty() {
        return Err(Error::Config("fanout must not be empty".into()));
    }
    if g.node_type(v) != scheme.start_type() {
        return Err(Error::TypeMismatch {
            node: v,
            expected: scheme.start_type().index(),
            actual: g.node_type(v).index(),
        });
    }
    let mut out = NeighborLayers::root(v, tag);
    for k in 1..=scheme.len() {
        let r = scheme.relationships()[k - 1];
        let want = scheme.node_types()[k];
        out.expand(fanout_at(fanout, k), rng, |p, rng| {
            let candidates = g.neighbors(p, r);
            let count = candidates.iter().filter(|&&n| g.node_type(n) == want).count();
            if count == 0 {
                return None;
            }
            let pick = rng.random_range(0..count);
            candidates.iter().filter(|&&n| g.node_type(n) == want).nth(pick).copied()
        });
    }
    Ok(out)
}

/// One randomized inter-relationship hop from `u`: a relationship uniform
/// over those where `u` has neighbors, then a neighbor uniform under it.
/// `None` for isolated nodes.
pub fn explore_step<R: Rng>(g: &MultiplexGraph, u: NodeId, rng: &mut R) -> Option<NodeId> {
    explore_step_via(g, u, rng).map(|(_, w)| w)
}

/// [`explore_step`], also reporting the relationship that was drawn.
pub fn explore_step_via<R: Rng>(g: &MultiplexGraph, u: NodeId, rng: &mut R) -> Option<(RelationshipId, NodeId)> {
    let available = g.relationships().filter(|&r| !g.neighbors(u, r).is_empty()).count();
    if available == 0 {
        return None;
    }
    let pick = rng.random_range(0..available);
    let r = g
        .relationships()
        .filter(|&r| !g.neighbors(u, r).is_empty())
        .nth(pick)
        .unwrap();
    let candidates = g.neighbors(u, r);
    Some((r, candidates[rng.random_range(0..candidates.len())]))
}

/// Layers of the randomized flow: `depth` rounds of [`explore_step`].
pub fn randomized_exploration_layers<R: Rng>(
    g: &MultiplexGraph,
    v: NodeId,
    depth: usize,
    fanout: &[usize],
    rng: &mut R,
) -> Result<NeighborLayers> {
    if fanout.is_empty() {
        return Err(Error::Config("fanout must not be empty".into()));
    }
    let mut out = NeighborLayers::root(v, FlowTag::Random);
    for k in 1..=depth {
        out.expand(fanout_at(fanout, k), rng, |p, rng| explore_step(g, p, rng));
    }
    Ok(out)
}

/// Noise distribution for negatives: within each node type, probability
/// proportional to `degree^0.75`.
#[derive(Clone, Debug)]
pub struct NegativeSampler {
    /// Per node type: members and cumulative weights.
    tables: Vec<(Vec<NodeId>, Vec<f64>)>,
    node_types: Vec<usize>,
}

pub const NEGATIVE_POWER: f64 = 0.75;

impl NegativeSampler {
    pub fn new(g: &MultiplexGraph) -> Self {
        let tables = (0..g.num_types())
            .map(|t| {
                let members = g.nodes_of_type(crate::graph::TypeId(t as u16)).to_vec();
                let mut acc = 0.0;
                let cumulative = members
                    .iter()
                    .map(|&n| {
                        acc += (g.degree(n) as f64).powf(NEGATIVE_POWER);
                        acc
                    })
                    .collect();
                (members, cumulative)
            })
            .collect();
        NegativeSampler {
            tables,
            node_types: g.node_types().iter().map(|t| t.index()).collect(),
        }
    }

    /// Probability of drawing each member of `context`'s type, with
    /// `context` itself excluded.
    pub fn probabilities(&self, context: NodeId) -> Vec<(NodeId, f64)> {
        let (members, cumulative) = &self.tables[self.node_types[context.index()]];
        let weights: Vec<f64> = cumulative
            .iter()
            .scan(0.0, |prev, &c| {
                let w = c - *prev;
                *prev = c;
                Some(w)
            })
            .collect();
        let others: f64 = members
            .iter()
            .zip(&weights)
            .filter(|(&n, _)| n != context)
            .map(|(_, &w)| w)
            .sum();
        let count = members.len() - 1;
        members
            .iter()
            .zip(&weights)
            .filter(|(&n, _)| n != context)
            .map(|(&n, &w)| (n, if others > 0.0 { w / others } else { 1.0 / count as f64 }))
            .collect()
    }

    /// `count` draws of the context's type, none equal to `context`.
    pub fn sample<R: Rng>(&self, context: NodeId, count: usize, rng: &mut R) -> Result<Vec<NodeId>> {
        let (members, cumulative) = &self.tables[self.node_types[context.index()]];
        if members.len() < 2 {
            return Err(Error::TypeExhausted(context));
        }
        let total = *cumulative.last().unwrap();
        let own = match members.binary_search(&context) {
            Ok(i) => cumulative[i] - if i == 0 { 0.0 } else { cumulative[i - 1] },
            Err(_) => 0.0,
        };
        let mut out = Vec::with_capacity(count);
        if total - own <= 0.0 {
            // No other member has degree; fall back to uniform.
            while out.len() < count {
                let n = members[rng.random_range(0..members.len())];
                if n != context {
                    out.push(n);
                }
            }
            return Ok(out);
        }
        while out.len() < count {
            let x = rng.random::<f64>() * total;
            let i = cumulative.partition_point(|&c| c <= x).min(members.len() - 1);
            let n = members[i];
            if n != context {
                out.push(n);
            }
        }
        Ok(out)
    }
}

/// Convenience wrapper building the noise distribution on the fly.
pub fn sample_negatives<R: Rng>(g: &MultiplexGraph, context: NodeId, count: usize, rng: &mut R) -> Result<Vec<NodeId>> {
    NegativeSampler::new(g).sample(context, count, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{load_graph, EdgeRecord};
    use crate::rng::stream;

    fn graph(edges: &[(&str, &str, &str)], types: &[(&str, &str)]) -> MultiplexGraph {
        load_graph(
            edges.iter().map(|(r, a, b)| EdgeRecord::new(*a, *b, *r)),
            types.iter().map(|(n, t)| (n.to_string(), t.to_string())),
        )
        .unwrap()
    }

    fn cfg() -> SamplerConfig {
        SamplerConfig {
            num_walks: 3,
            walk_length: 6,
            window: 2,
            seed: 11,
            ..SamplerConfig::default()
        }
    }

    #[test]
    fn context_pairs_window_one() {
        let w = Walk {
            relationship: RelationshipId(0),
            nodes: vec![NodeId(0), NodeId(1), NodeId(2)],
        };
        let got: BTreeSet<(u32, u32)> = context_pairs([&w], 1).iter().map(|p| (p.center.0, p.context.0)).collect();
        let want: BTreeSet<(u32, u32)> = [(0, 1), (1, 0), (1, 2), (2, 1)].into_iter().collect();
        assert_eq!(got, want);
    }

    #[test]
    fn context_pairs_window_two_counts() {
        let w = Walk {
            relationship: RelationshipId(3),
            nodes: (0..5).map(NodeId).collect(),
        };
        let pairs = context_pairs([&w], 2);
        assert_eq!(pairs.len(), 14);
        assert!(pairs.iter().all(|p| p.relationship == RelationshipId(3)));
        let single = Walk {
            relationship: RelationshipId(0),
            nodes: vec![NodeId(4)],
        };
        assert!(context_pairs([&single], 3).is_empty());
    }

    #[test]
    fn typed_walks_alternate_types() {
        let g = graph(
            &[("r", "u1", "i1"), ("r", "u2", "i1"), ("r", "u2", "i2"), ("r", "u3", "i2"), ("r", "u1", "u2")],
            &[("u1", "U"), ("u2", "U"), ("u3", "U"), ("i1", "I"), ("i2", "I")],
        );
        let r = RelationshipId(0);
        let scheme = MetapathScheme::parse(&g, "U-I-U", r).unwrap();
        let walks = training_walks(&g, r, &scheme, &cfg()).unwrap();
        assert_eq!(walks.len(), 3 * 3);
        let (u, i) = (g.type_id("U").unwrap(), g.type_id("I").unwrap());
        for w in &walks {
            assert!(w.nodes.len() <= 6);
            for (pos, pair) in w.nodes.windows(2).enumerate() {
                assert!(g.has_edge(r, pair[0], pair[1]));
                let _ = pos;
            }
            for (pos, &n) in w.nodes.iter().enumerate() {
                assert_eq!(g.node_type(n), if pos % 2 == 0 { u } else { i });
            }
        }
        assert_eq!(walks, training_walks(&g, r, &scheme, &cfg()).unwrap());
    }

    #[test]
    fn walk_from_dead_end_has_one_node() {
        let g = graph(&[("r", "u1", "u2"), ("r", "u3", "i1")], &[("u1", "U"), ("u2", "U"), ("u3", "U"), ("i1", "I")]);
        let r = RelationshipId(0);
        let scheme = MetapathScheme::parse(&g, "U-I-U", r).unwrap();
        let walks = training_walks(&g, r, &scheme, &cfg()).unwrap();
        let u1 = g.node_id("u1").unwrap();
        assert!(walks.iter().filter(|w| w.nodes[0] == u1).all(|w| w.nodes.len() == 1));
    }

    #[test]
    fn walk_scheme_checks() {
        let g = graph(&[("r", "u1", "i1"), ("s", "u1", "i1")], &[("u1", "U"), ("i1", "I"), ("x", "X")]);
        let (r, s) = (RelationshipId(0), RelationshipId(1));
        let inter = MetapathScheme::parse(&g, "U-I-U|r,s", r).unwrap();
        assert!(training_walks(&g, r, &inter, &cfg()).is_err());
        let open = MetapathScheme::parse(&g, "U-I", r).unwrap();
        assert!(training_walks(&g, r, &open, &cfg()).is_err());
        let _ = s;
    }

    #[test]
    fn chain_with_unit_fanout_is_the_chain() {
        let g = graph(&[("r", "a", "b"), ("s", "b", "c")], &[("a", "A"), ("b", "B"), ("c", "C")]);
        let scheme = MetapathScheme::parse(&g, "A-B-C|r,s", RelationshipId(0)).unwrap();
        let mut rng = stream(1, Domain::Report, 0, 0, 0);
        let l = metapath_guided_layers(&g, NodeId(0), &scheme, &[1, 1], FlowTag::Scheme(0), &mut rng).unwrap();
        assert_eq!(l.layers, vec![vec![NodeId(0)], vec![NodeId(1)], vec![NodeId(2)]]);
        assert!(l.backfilled.iter().flatten().all(|b| !b));
        let err = metapath_guided_layers(&g, NodeId(1), &scheme, &[1], FlowTag::Scheme(0), &mut rng).unwrap_err();
        assert!(matches!(err, Error::TypeMismatch { .. }));
    }

    #[test]
    fn dead_end_backfills_parent() {
        let g = graph(&[("r", "a", "b"), ("r", "a", "c")], &[("a", "A"), ("b", "B"), ("c", "B")]);
        let scheme = MetapathScheme::parse(&g, "A-B-A", RelationshipId(0)).unwrap();
        let mut rng = stream(1, Domain::Report, 0, 0, 0);
        let l = metapath_guided_layers(&g, NodeId(0), &scheme, &[3, 2], FlowTag::Scheme(0), &mut rng).unwrap();
        assert_eq!(l.layers[1].len(), 3);
        assert_eq!(l.layers[2].len(), 6);
        // b and c only connect back to a, which is of type A: legal.
        assert!(l.layers[2].iter().all(|&n| n == NodeId(0)));
        assert!(l.backfilled[2].iter().all(|&b| !b));

        let lone = graph(&[("r", "a", "b")], &[("a", "A"), ("b", "B"), ("z", "A")]);
        let z = lone.node_id("z").unwrap();
        let l = metapath_guided_layers(&lone, z, &scheme, &[2, 2], FlowTag::Scheme(0), &mut rng).unwrap();
        assert!(l.layers.iter().flatten().all(|&n| n == z));
        assert!(l.backfilled[1].iter().chain(&l.backfilled[2]).all(|&b| b));
        assert!(l.support(1).is_empty());
    }

    #[test]
    fn isolated_node_explores_nowhere() {
        let g = graph(&[("r", "a", "b")], &[("a", "T"), ("b", "T"), ("c", "T")]);
        let c = g.node_id("c").unwrap();
        let mut rng = stream(3, Domain::Report, 0, 0, 0);
        let l = randomized_exploration_layers(&g, c, 2, &[4, 3], &mut rng).unwrap();
        assert_eq!(l.layers[2].len(), 12);
        assert!(l.layers.iter().flatten().all(|&n| n == c));
    }

    #[test]
    fn single_relationship_exploration_stays_on_it() {
        let g = graph(&[("r", "a", "b"), ("r", "a", "c"), ("s", "b", "c")], &[("a", "T"), ("b", "T"), ("c", "T")]);
        let a = g.node_id("a").unwrap();
        let mut rng = stream(3, Domain::Report, 0, 0, 0);
        for _ in 0..200 {
            let n = explore_step(&g, a, &mut rng).unwrap();
            assert!(g.has_edge(RelationshipId(0), a, n));
        }
    }

    #[test]
    fn negatives_respect_type_and_count() {
        let g = graph(
            &[("r", "u1", "i1"), ("r", "u2", "i2"), ("r", "u1", "i2")],
            &[("u1", "U"), ("u2", "U"), ("u3", "U"), ("i1", "I"), ("i2", "I")],
        );
        let sampler = NegativeSampler::new(&g);
        let u1 = g.node_id("u1").unwrap();
        let mut rng = stream(5, Domain::Negatives, 0, 0, 0);
        let negs = sampler.sample(u1, 5, &mut rng).unwrap();
        assert_eq!(negs.len(), 5);
        assert!(negs.iter().all(|&n| n != u1 && g.node_type(n) == g.node_type(u1)));
        // u3 has degree zero
        assert!(negs.iter().all(|&n| n == g.node_id("u2").unwrap()));
    }

    #[test]
    fn lone_type_is_exhausted() {
        let g = graph(&[("r", "a", "b")], &[("a", "A"), ("b", "B")]);
        let mut rng = stream(5, Domain::Negatives, 0, 0, 0);
        assert!(matches!(
            sample_negatives(&g, NodeId(0), 1, &mut rng),
            Err(Error::TypeExhausted(_))
        ));
    }

    #[test]
    fn config_validation() {
        assert!(SamplerConfig::default().validate().is_ok());
        let bad = SamplerConfig {
            window: 10,
            ..SamplerConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SamplerConfig {
            fanout: vec![],
            ..SamplerConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
