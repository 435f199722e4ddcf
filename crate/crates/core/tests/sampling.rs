use std::collections::BTreeSet;

use hybridgnn::graph::MetapathScheme;
use hybridgnn::rng::{stream, Domain};
use hybridgnn::sampler::{
    context_pairs, explore_step, metapath_guided_layers, randomized_exploration_layers, training_walks, FlowTag,
    NegativeSampler, SamplerConfig,
};
use hybridgnn::Error;
use hybridgnn_testkit::fixtures::{node, planted_fixture, six_node_graph, toy_video_graph, user_item_schemes};
use hybridgnn_testkit::laws::{empirical, exploration_law, tv_distance, typed_step_law};
use hybridgnn_testkit::oracle::metapath_neighbors;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn toy_layers_follow_the_scheme() {
    let g = toy_video_graph();
    let like = g.relationship_id("like").unwrap();
    let comment = g.relationship_id("comment").unwrap();
    let ty = |n: &str| g.type_id(n).unwrap();
    let scheme = MetapathScheme::new(vec![ty("V"), ty("U"), ty("A")], vec![like, comment]).unwrap();
    let v1 = node(&g, "v1");
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let layers = metapath_guided_layers(&g, v1, &scheme, &[16, 16], FlowTag::Scheme(0), &mut rng).unwrap();
    let labels = |k: usize| layers.support(k).into_iter().map(|n| g.node_label(n).to_string()).collect::<Vec<_>>();
    assert_eq!(labels(1), vec!["u1", "u2"]);
    assert_eq!(labels(2), vec!["a1"]);
    assert_eq!(layers.support(1), metapath_neighbors(&g, v1, &scheme, 1));
}

#[test]
fn wrong_start_type_is_rejected() {
    let g = toy_video_graph();
    let like = g.relationship_id("like").unwrap();
    let ty = |n: &str| g.type_id(n).unwrap();
    let scheme = MetapathScheme::intra(vec![ty("V"), ty("U")], like).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let err = metapath_guided_layers(&g, node(&g, "u1"), &scheme, &[2], FlowTag::Scheme(0), &mut rng).unwrap_err();
    assert!(matches!(err, Error::TypeMismatch { .. }));
}

#[test]
fn dead_ends_backfill_the_parent() {
    let g = toy_video_graph();
    let like = g.relationship_id("like").unwrap();
    let ty = |n: &str| g.type_id(n).unwrap();
    // a1 has no V neighbors under like
    let scheme = MetapathScheme::intra(vec![ty("U"), ty("A"), ty("V")], like).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let layers = metapath_guided_layers(&g, node(&g, "u1"), &scheme, &[3], FlowTag::Scheme(0), &mut rng).unwrap();
    assert_eq!(layers.layers[2].len(), 9);
    assert!(layers.backfilled[2].iter().all(|&b| b));
    assert!(layers.support(2).is_empty());
    assert!(layers.layers[2].iter().all(|&n| n == node(&g, "a1")));
}

#[test]
fn exploration_hop_matches_law() {
    let g = six_node_graph();
    for u in g.nodes() {
        let mut rng = stream(7, Domain::Walk, u.0 as u64, 0, 0);
        let draws = (0..20_000).map(|_| explore_step(&g, u, &mut rng).unwrap());
        let tv = tv_distance(&empirical(draws), &exploration_law(&g, u));
        assert!(tv < 0.02, "node {u:?}: tv {tv}");
    }
}

#[test]
fn randomized_layers_support_is_reachable() {
    let g = six_node_graph();
    let a = node(&g, "a");
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let layers = randomized_exploration_layers(&g, a, 2, &[4, 3], &mut rng).unwrap();
    assert_eq!(layers.layers[1].len(), 4);
    assert_eq!(layers.layers[2].len(), 12);
    let first: BTreeSet<_> = exploration_law(&g, a).into_keys().collect();
    assert!(layers.support(1).is_subset(&first));
}

#[test]
fn walks_alternate_types() {
    let g = planted_fixture(1);
    let schemes = user_item_schemes(&g);
    let item = g.type_id("I").unwrap();
    let user = g.type_id("U").unwrap();
    let cfg = SamplerConfig::default();
    for r in g.relationships() {
        let walks = training_walks(&g, r, &schemes[r.index()][0], &cfg).unwrap();
        assert_eq!(walks.len(), 100 * cfg.num_walks);
        for w in &walks {
            assert!(w.nodes.len() <= cfg.walk_length);
            for (i, &n) in w.nodes.iter().enumerate() {
                assert_eq!(g.node_type(n), if i % 2 == 1 { item } else { user });
            }
            for pair in w.nodes.windows(2) {
                assert!(g.has_edge(r, pair[0], pair[1]));
            }
        }
    }
}

#[test]
fn walk_first_step_is_uniform_over_typed_neighbors() {
    let g = six_node_graph();
    let r1 = g.relationship_id("r1").unwrap();
    let (u, i) = (g.type_id("U").unwrap(), g.type_id("I").unwrap());
    let scheme = MetapathScheme::intra(vec![u, i, u], r1).unwrap();
    let cfg = SamplerConfig {
        num_walks: 20_000,
        walk_length: 2,
        window: 1,
        ..SamplerConfig::default()
    };
    let walks = training_walks(&g, r1, &scheme, &cfg).unwrap();
    let a = node(&g, "a");
    let seconds = walks.iter().filter(|w| w.nodes[0] == a).map(|w| w.nodes[1]);
    let tv = tv_distance(&empirical(seconds), &typed_step_law(&g, a, r1, i));
    assert!(tv < 0.02, "tv {tv}");
}

#[test]
fn walk_schemes_must_be_intra_and_cyclic() {
    let g = six_node_graph();
    let r1 = g.relationship_id("r1").unwrap();
    let r2 = g.relationship_id("r2").unwrap();
    let (u, i) = (g.type_id("U").unwrap(), g.type_id("I").unwrap());
    let cfg = SamplerConfig::default();
    let open = MetapathScheme::intra(vec![u, i], r1).unwrap();
    assert!(matches!(training_walks(&g, r1, &open, &cfg), Err(Error::InvalidScheme(_))));
    let mixed = MetapathScheme::new(vec![u, i, u], vec![r1, r2]).unwrap();
    assert!(matches!(training_walks(&g, r1, &mixed, &cfg), Err(Error::InvalidScheme(_))));
    let other = MetapathScheme::intra(vec![u, i, u], r2).unwrap();
    assert!(matches!(training_walks(&g, r1, &other, &cfg), Err(Error::InvalidScheme(_))));
}

#[test]
fn walks_are_reproducible() {
    let g = planted_fixture(2);
    let schemes = user_item_schemes(&g);
    let r = g.relationship_id("r1").unwrap();
    let cfg = SamplerConfig { seed: 11, ..SamplerConfig::default() };
    let a = training_walks(&g, r, &schemes[0][0], &cfg).unwrap();
    let b = training_walks(&g, r, &schemes[0][0], &cfg).unwrap();
    assert_eq!(a, b);
    let c = training_walks(&g, r, &schemes[0][0], &SamplerConfig { seed: 12, ..cfg }).unwrap();
    assert_ne!(a, c);
}

#[test]
fn context_window_excludes_center() {
    let g = planted_fixture(3);
    let schemes = user_item_schemes(&g);
    let r = g.relationship_id("r2").unwrap();
    let cfg = SamplerConfig::default();
    let walks = training_walks(&g, r, &schemes[1][0], &cfg).unwrap();
    let pairs = context_pairs(&walks, 2);
    assert!(pairs.iter().all(|p| p.center != p.context && p.relationship == r));
    let bound: usize = walks.iter().map(|w| w.nodes.len() * 4).sum();
    assert!(pairs.len() <= bound);
}

#[test]
fn negatives_follow_the_noise_law() {
    let g = six_node_graph();
    let sampler = NegativeSampler::new(&g);
    let x = node(&g, "x");
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let draws = sampler.sample(x, 50_000, &mut rng).unwrap();
    assert!(draws.iter().all(|&n| n != x && g.node_type(n) == g.node_type(x)));
    let law = sampler.probabilities(x).into_iter().collect();
    assert!(tv_distance(&empirical(draws), &law) < 0.02);

    // weights are degree^0.75 among the other members of the type
    let (y, z) = (node(&g, "y"), node(&g, "z"));
    let w = |n| (g.degree(n) as f64).powf(0.75);
    let p = sampler.probabilities(x);
    let py = p.iter().find(|(n, _)| *n == y).unwrap().1;
    assert!((py - w(y) / (w(y) + w(z))).abs() < 1e-12);
}

#[test]
fn five_negatives_of_the_context_type() {
    let g = planted_fixture(4);
    let sampler = NegativeSampler::new(&g);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for v in g.nodes().step_by(17) {
        let negs = sampler.sample(v, 5, &mut rng).unwrap();
        assert_eq!(negs.len(), 5);
        assert!(negs.iter().all(|&n| n != v && g.node_type(n) == g.node_type(v)));
    }
}

#[test]
fn lone_type_member_cannot_draw_negatives() {
    let g = toy_video_graph();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let v1 = node(&g, "v1");
    assert!(matches!(NegativeSampler::new(&g).sample(v1, 1, &mut rng), Err(Error::TypeExhausted(_))));
}
