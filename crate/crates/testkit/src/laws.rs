//! Exact next-hop distributions of the samplers and distance helpers.

use std::collections::{BTreeMap, BTreeSet};

use hybridgnn::graph::{MultiplexGraph, NodeId, RelationshipId, TypeId};

pub type Law<K = NodeId> = BTreeMap<K, f64>;

/// Joint law of one randomized exploration hop from `u`: relationship
/// uniform over those with neighbors, then a neighbor uniform under it.
pub fn exploration_joint_law(g: &MultiplexGraph, u: NodeId) -> Law<(RelationshipId, NodeId)> {
    let available: Vec<RelationshipId> = g.relationships().filter(|&r| !g.neighbors(u, r).is_empty()).collect();
    let mut law = Law::new();
    for &r in &available {
        let nbrs: Vec<NodeId> = g.nodes().filter(|&w| g.has_edge(r, u, w)).collect();
        for w in &nbrs {
            law.insert((r, *w), 1.0 / (available.len() * nbrs.len()) as f64);
        }
    }
    law
}

/// Marginal over the landing node of [`exploration_joint_law`].
pub fn exploration_law(g: &MultiplexGraph, u: NodeId) -> Law {
    let mut law = Law::new();
    for ((_, w), p) in exploration_joint_law(g, u) {
        *law.entry(w).or_default() += p;
    }
    law
}

/// One typed walk step from `u` under `r` towards type `want`.
pub fn typed_step_law(g: &MultiplexGraph, u: NodeId, r: RelationshipId, want: TypeId) -> Law {
    let ok: Vec<NodeId> = g.nodes().filter(|&w| g.has_edge(r, u, w) && g.node_type(w) == want).collect();
    ok.iter().map(|&w| (w, 1.0 / ok.len() as f64)).collect()
}

/// Law of the first `steps` moves of a typed walk from `start` that follows
/// `pattern` (types at positions 1, 2, ...) under `r`, over full prefixes.
/// Walks that dead-end keep their shorter prefix.
pub fn typed_walk_law(g: &MultiplexGraph, start: NodeId, r: RelationshipId, pattern: &[TypeId], steps: usize) -> Law<Vec<NodeId>> {
    let mut law: Law<Vec<NodeId>> = Law::new();
    law.insert(vec![start], 1.0);
    for t in 0..steps {
        let mut next = Law::new();
        for (path, p) in law {
            let step = typed_step_law(g, *path.last().unwrap(), r, pattern[t % pattern.len()]);
            if step.is_empty() {
                next.insert(path, p);
                continue;
            }
            for (w, q) in step {
                let mut longer = path.clone();
                longer.push(w);
                next.insert(longer, p * q);
            }
        }
        law = next;
    }
    law
}

/// Empirical distribution of `draws`.
pub fn empirical<K: Ord>(draws: impl IntoIterator<Item = K>) -> Law<K> {
    let mut counts: BTreeMap<K, usize> = BTreeMap::new();
    let mut n = 0usize;
    for d in draws {
        *counts.entry(d).or_default() += 1;
        n += 1;
    }
    counts.into_iter().map(|(k, c)| (k, c as f64 / n as f64)).collect()
}

/// Total-variation distance `1/2 * sum |p - q|`.
pub fn tv_distance<K: Ord>(p: &Law<K>, q: &Law<K>) -> f64 {
    let keys: BTreeSet<&K> = p.keys().chain(q.keys()).collect();
    keys.into_iter()
        .map(|k| (p.get(k).copied().unwrap_or(0.0) - q.get(k).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
        / 2.0
}
