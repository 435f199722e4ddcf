//! Graph fixtures.

use hybridgnn::graph::{load_graph, EdgeRecord, MetapathScheme, MultiplexGraph, NodeId, RelationshipId, TypeId};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn build(edges: Vec<EdgeRecord>, types: Vec<(String, String)>) -> MultiplexGraph {
    load_graph(edges, types).expect("fixture graph")
}

/// Videos, users and authors joined by `like` and `comment`:
/// `v1 -like- u1, u2`, `u1 -like- a1`, `u1 -comment- a1`, `u2 -comment- a1`.
pub fn toy_video_graph() -> MultiplexGraph {
    let edges = vec![
        EdgeRecord::new("u1", "a1", "like"),
        EdgeRecord::new("u1", "a1", "comment"),
        EdgeRecord::new("v1", "u1", "like"),
        EdgeRecord::new("v1", "u2", "like"),
        EdgeRecord::new("u2", "a1", "comment"),
    ];
    let types = [("u1", "U"), ("u2", "U"), ("a1", "A"), ("v1", "V")]
        .iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
    build(edges, types)
}

/// Six nodes, two types, two relationships, with uneven relationship
/// availability and degrees so every sampling law is non-uniform.
pub fn six_node_graph() -> MultiplexGraph {
    let edges = [
        ("a", "x", "r1"),
        ("a", "y", "r1"),
        ("a", "z", "r1"),
        ("a", "x", "r2"),
        ("b", "y", "r1"),
        ("b", "z", "r2"),
        ("c", "z", "r2"),
        ("c", "x", "r2"),
        ("a", "b", "r2"),
    ]
    .iter()
    .map(|(s, d, r)| EdgeRecord::new(*s, *d, *r))
    .collect();
    let types = [("a", "U"), ("b", "U"), ("c", "U"), ("x", "I"), ("y", "I"), ("z", "I")]
        .iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
    build(edges, types)
}

/// Random multiplex graph with at most `max_nodes` nodes, `max_types` types
/// and `max_rels` relationships. Every relationship gets at least one edge.
pub fn random_graph(rng: &mut impl Rng, max_nodes: usize, max_types: usize, max_rels: usize) -> MultiplexGraph {
    let n = rng.random_range(3..=max_nodes);
    let types = rng.random_range(1..=max_types);
    let rels = rng.random_range(1..=max_rels);
    let labels: Vec<String> = (0..n).map(|i| format!("n{i:02}")).collect();
    let type_of: Vec<usize> = (0..n).map(|i| if i < types { i } else { rng.random_range(0..types) }).collect();
    let density = rng.random_range(0.1..0.5);
    let mut edges = Vec::new();
    for r in 0..rels {
        let before = edges.len();
        for a in 0..n {
            for b in a + 1..n {
                if rng.random_bool(density) {
                    edges.push(EdgeRecord::new(labels[a].clone(), labels[b].clone(), format!("r{r}")));
                }
            }
        }
        if edges.len() == before {
            edges.push(EdgeRecord::new(labels[0].clone(), labels[1].clone(), format!("r{r}")));
        }
    }
    let types = labels.iter().zip(&type_of).map(|(l, t)| (l.clone(), format!("T{t}"))).collect();
    build(edges, types)
}

/// A scheme of `len` steps drawn by walking the graph's schema, starting at
/// `start`'s type. `None` when the schema dead-ends first.
pub fn random_scheme(g: &MultiplexGraph, start: TypeId, len: usize, rng: &mut impl Rng) -> Option<MetapathScheme> {
    let mut types = vec![start];
    let mut rels = Vec::new();
    for _ in 0..len {
        let last = *types.last().unwrap();
        let options: Vec<(TypeId, RelationshipId, TypeId)> =
            g.schema().iter().copied().filter(|&(a, _, _)| a == last).collect();
        let &(_, r, b) = options.choose(rng)?;
        rels.push(r);
        types.push(b);
    }
    MetapathScheme::new(types, rels).ok()
}

/// Users and items in `communities` groups. Relationship `r2` is dense
/// inside groups with light cross-group noise; relationship `r1` is sparse
/// and lives inside groups, so `r2` structure predicts `r1` edges.
pub fn planted_graph(seed: u64, users: usize, items: usize, communities: usize) -> MultiplexGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let user = |i: usize| format!("u{i:03}");
    let item = |i: usize| format!("i{i:03}");
    let group_items: Vec<Vec<usize>> = (0..communities)
        .map(|c| (0..items).filter(|i| i % communities == c).collect())
        .collect();
    let mut edges = Vec::new();
    for u in 0..users {
        let own = &group_items[u % communities];
        for &i in own.choose_multiple(&mut rng, 5) {
            edges.push(EdgeRecord::new(user(u), item(i), "r2"));
        }
        if rng.random_bool(0.3) {
            edges.push(EdgeRecord::new(user(u), item(rng.random_range(0..items)), "r2"));
        }
        for &i in own.choose_multiple(&mut rng, 3) {
            edges.push(EdgeRecord::new(user(u), item(i), "r1"));
        }
    }
    let mut types: Vec<(String, String)> = (0..users).map(|u| (user(u), "U".to_string())).collect();
    types.extend((0..items).map(|i| (item(i), "I".to_string())));
    build(edges, types)
}

/// The 200-node learning fixture: 100 users, 100 items, 10 groups.
pub fn planted_fixture(seed: u64) -> MultiplexGraph {
    planted_graph(seed, 100, 100, 10)
}

/// `U-I-U` and `I-U-I` under every relationship.
pub fn user_item_schemes(g: &MultiplexGraph) -> Vec<Vec<MetapathScheme>> {
    let u = g.type_id("U").expect("U type");
    let i = g.type_id("I").expect("I type");
    g.relationships()
        .map(|r| {
            vec![
                MetapathScheme::intra(vec![u, i, u], r).unwrap(),
                MetapathScheme::intra(vec![i, u, i], r).unwrap(),
            ]
        })
        .collect()
}

/// 30 nodes of two types under two relationships; used for gradient checks.
pub fn gradient_graph(seed: u64) -> MultiplexGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let label = |i: usize| format!("n{i:02}");
    let mut edges = Vec::new();
    for a in 0..30 {
        for b in a + 1..30 {
            for (r, p) in [("buy", 0.08), ("view", 0.15)] {
                // only cross-type edges under buy, any pair under view
                if (r == "view" || (a % 2) != (b % 2)) && rng.random_bool(p) {
                    edges.push(EdgeRecord::new(label(a), label(b), r));
                }
            }
        }
    }
    let types = (0..30).map(|i| (label(i), if i % 2 == 0 { "U" } else { "I" }.to_string())).collect();
    build(edges, types)
}

pub fn node(g: &MultiplexGraph, label: &str) -> NodeId {
    g.node_id(label).unwrap_or_else(|| panic!("no node {label}"))
}

/// Initialized parameters with every entry shifted by uniform noise in
/// `(-spread, spread)`, so biases are non-zero and embeddings are large
/// enough to give every term a visible gradient.
pub fn noisy_params(
    g: &MultiplexGraph,
    schemes: Vec<Vec<MetapathScheme>>,
    config: &hybridgnn::model::ModelConfig,
    seed: u64,
    spread: f64,
) -> hybridgnn::model::ModelParams {
    let registry = hybridgnn::model::SchemeRegistry::new(g, schemes).expect("schemes");
    let mut params = hybridgnn::model::init_params(config, g, registry, seed).expect("init");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    params.tensors.visit_mut(|_, m| {
        for x in m.as_mut_slice() {
            *x += rng.random_range(-spread..spread);
        }
    });
    params
}
