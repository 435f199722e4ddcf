//! Straight-line reference implementations.

use std::collections::BTreeSet;

use hybridgnn::graph::{MetapathScheme, MultiplexGraph, NodeId, RelationshipId};
use hybridgnn::model::{Activation, ModelParams, NodeFlows};
use hybridgnn::sampler::{FlowTag, NeighborLayers};

type Vector = Vec<f64>;
type Rows = Vec<Vec<f64>>;

fn table_row(m: &hybridgnn::linalg::Matrix, i: usize) -> Vector {
    (0..m.cols()).map(|j| m[(i, j)]).collect()
}

fn to_rows(m: &hybridgnn::linalg::Matrix) -> Rows {
    (0..m.rows()).map(|i| table_row(m, i)).collect()
}

/// `x W` for a row vector.
fn row_times(x: &[f64], w: &Rows) -> Vector {
    let cols = w.first().map_or(0, Vec::len);
    (0..cols).map(|j| x.iter().zip(w).map(|(a, row)| a * row[j]).sum()).collect()
}

/// `W x` for a column vector.
fn times_col(w: &Rows, x: &[f64]) -> Vector {
    w.iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

/// Nodes at position `k` of any walk that follows the first `k` steps of
/// `scheme` from `v`, found by enumerating every such walk.
pub fn metapath_neighbors(g: &MultiplexGraph, v: NodeId, scheme: &MetapathScheme, k: usize) -> BTreeSet<NodeId> {
    let mut frontier = vec![vec![v]];
    for step in 0..k {
        let r = scheme.relationships()[step];
        let want = scheme.node_types()[step + 1];
        let mut next = Vec::new();
        for path in &frontier {
            let last = *path.last().unwrap();
            for u in g.nodes() {
                if g.has_edge(r, last, u) && g.node_type(u) == want {
                    let mut p = path.clone();
                    p.push(u);
                    next.push(p);
                }
            }
        }
        frontier = next;
    }
    frontier.into_iter().map(|p| p[k]).collect()
}

fn agg_set(params: &ModelParams, tag: FlowTag, k: usize) -> usize {
    let lengths: Vec<usize> = params.registry.entries().iter().map(|e| e.scheme.len()).collect();
    match tag {
        FlowTag::Scheme(s) => lengths[..s].iter().sum::<usize>() + k - 1,
        FlowTag::Random => lengths.iter().sum(),
    }
}

/// `h^k` of entry `i` of layer `j`, expanded recursively down the tree.
fn h(params: &ModelParams, flow: &NeighborLayers, k: usize, j: usize, i: usize) -> Vector {
    if k == 0 {
        return table_row(&params.tensors.leaf, flow.layers[j][i].index());
    }
    let fanout = flow.layers[j + 1].len() / flow.layers[j].len();
    let mut sum = h(params, flow, k - 1, j, i);
    for c in 0..fanout {
        let child = h(params, flow, k - 1, j + 1, i * fanout + c);
        for (s, x) in sum.iter_mut().zip(child) {
            *s += x;
        }
    }
    let mean: Vector = sum.iter().map(|s| s / (fanout + 1) as f64).collect();
    let set = agg_set(params, flow.tag, k);
    let w = to_rows(&params.tensors.agg_w[set]);
    let b = table_row(&params.tensors.agg_b[set], 0);
    times_col(&w, &mean)
        .into_iter()
        .zip(b)
        .map(|(z, b)| match params.config.activation {
            Activation::Relu => (z + b).max(0.0),
            Activation::Identity => z + b,
        })
        .collect()
}

/// Output vector of one flow.
pub fn flow_output(params: &ModelParams, flow: &NeighborLayers) -> Vector {
    h(params, flow, flow.layers.len() - 1, 0, 0)
}

/// Scaled dot-product self-attention; returns `(weights, output)`.
pub fn attention(x: &Rows, wq: &Rows, wk: &Rows, wv: &Rows) -> (Rows, Rows) {
    let q: Rows = x.iter().map(|r| row_times(r, wq)).collect();
    let k: Rows = x.iter().map(|r| row_times(r, wk)).collect();
    let v: Rows = x.iter().map(|r| row_times(r, wv)).collect();
    let scale = (wq[0].len() as f64).sqrt();
    let mut weights = Vec::new();
    for qi in &q {
        let logits: Vector = k.iter().map(|kj| qi.iter().zip(kj).map(|(a, b)| a * b).sum::<f64>() / scale).collect();
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vector = logits.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        weights.push(exps.into_iter().map(|e| e / total).collect::<Vector>());
    }
    let out = weights
        .iter()
        .map(|wi: &Vector| {
            let mut o = vec![0.0; v[0].len()];
            for (a, vj) in wi.iter().zip(&v) {
                for (oo, x) in o.iter_mut().zip(vj) {
                    *oo += a * x;
                }
            }
            o
        })
        .collect();
    (weights, out)
}

fn mix(x: &Rows, wq: &Rows, wk: &Rows, wv: &Rows, enabled: bool) -> Rows {
    if enabled {
        attention(x, wq, wk, wv).1
    } else {
        x.iter().map(|r| row_times(r, wv)).collect()
    }
}

/// `e*_{v,r}` for the node owning `flows`.
pub fn embedding(params: &ModelParams, g: &MultiplexGraph, flows: &NodeFlows, r: RelationshipId) -> Vector {
    let t = &params.tensors;
    let ablation = params.config.ablation;
    let d_k = params.dims().d_k;
    let (mq, mk, mv) = (to_rows(&t.mp_q), to_rows(&t.mp_k), to_rows(&t.mp_v));
    let mut u: Rows = Vec::new();
    for per_rel in &flows.per_relationship {
        if per_rel.is_empty() {
            u.push(vec![0.0; d_k]);
            continue;
        }
        let stacked: Rows = per_rel.iter().map(|f| flow_output(params, f)).collect();
        let mixed = mix(&stacked, &mq, &mk, &mv, ablation.metapath_attention);
        let mut pooled = vec![0.0; d_k];
        for row in &mixed {
            for (p, x) in pooled.iter_mut().zip(row) {
                *p += x / mixed.len() as f64;
            }
        }
        u.push(pooled);
    }
    let (rq, rk, rv) = (to_rows(&t.rel_q), to_rows(&t.rel_k), to_rows(&t.rel_v));
    let local = &mix(&u, &rq, &rk, &rv, ablation.relationship_attention)[r.index()];
    let ty = g.node_type(flows.node).index();
    let proj = to_rows(&t.out_proj[ty * g.num_relationships() + r.index()]);
    row_times(local, &proj)
        .into_iter()
        .zip(table_row(&t.base, flows.node.index()))
        .map(|(a, b)| a + b)
        .collect()
}

fn log_sigmoid(x: f64) -> f64 {
    let v = -(1.0 + (-x).exp()).ln();
    v.max((1e-12f64).ln())
}

/// Negative-sampling loss of one pair.
pub fn pair_loss(e: &[f64], context: &[f64], negatives: &[Vec<f64>]) -> f64 {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    -log_sigmoid(dot(context, e)) - negatives.iter().map(|n| log_sigmoid(-dot(n, e))).sum::<f64>()
}
