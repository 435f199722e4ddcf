//! Forward pass with recorded intermediates, and the matching reverse pass.
//!
//! The operator graph is fixed (mean aggregation, linear map, activation,
//! scaled dot-product attention, mean pooling, projection), so gradients are
//! written out by hand against the traces recorded here.

use crate::error::{Error, Result};
use crate::graph::{MultiplexGraph, NodeId, RelationshipId, TypeId};
use crate::linalg::{axpy, mat_t_vec_add, mat_vec, outer_add, softmax_rows, vec_mat, Matrix};
use crate::sampler::{FlowTag, NeighborLayers};

use super::{Activation, ModelParams, NodeFlows, Tensors};

/// Intermediates of one flow aggregation.
#[derive(Clone, Debug)]
pub struct AggTrace {
    /// `h[k][j]`: layer `j` after `k` steps, flattened `len(L_j) x d_h`,
    /// present for `j <= K - k`.
    pub h: Vec<Vec<Vec<f64>>>,
    /// `means[k - 1][j]`: mean input of step `k`.
    pub means: Vec<Vec<Vec<f64>>>,
    /// `pre[k - 1][j]`: pre-activation of step `k`.
    pub pre: Vec<Vec<Vec<f64>>>,
}

impl AggTrace {
    /// `h^{(K)}` of the origin.
    pub fn output(&self) -> &[f64] {
        &self.h.last().unwrap()[0]
    }
}

fn check_flow(params: &ModelParams, layers: &NeighborLayers) -> Result<()> {
    if let FlowTag::Scheme(s) = layers.tag {
        let entries = params.registry.entries();
        if s >= entries.len() {
            return Err(Error::ShapeMismatch(format!("flow refers to unknown scheme {s}")));
        }
        if entries[s].scheme.len() != layers.depth() {
            return Err(Error::ShapeMismatch(format!(
                "scheme {s} has {} steps but layers have depth {}",
                entries[s].scheme.len(),
                layers.depth()
            )));
        }
    }
    for k in 1..layers.layers.len() {
        let (parents, children) = (layers.layers[k - 1].len(), layers.layers[k].len());
        if parents == 0 || children % parents != 0 || children == 0 {
            return Err(Error::ShapeMismatch(format!("layer {k} is not a whole fanout of layer {}", k - 1)));
        }
    }
    if layers.layers.iter().flatten().any(|n| n.index() >= params.num_nodes()) {
        return Err(Error::ShapeMismatch("layer node outside the parameter table".into()));
    }
    Ok(())
}

/// Bottom-up mean aggregation over the layers of one flow:
/// `h^k(u) = act(W_k * mean(h^{k-1}(u), h^{k-1}(children of u)) + b_k)`,
/// with `h^0` read from the leaf table.
pub fn aggregate_forward(params: &ModelParams, layers: &NeighborLayers) -> Result<AggTrace> {
    check_flow(params, layers)?;
    let d_h = params.dims().d_h;
    let depth = layers.depth();
    let leaf = &params.tensors.leaf;
    let mut h: Vec<Vec<Vec<f64>>> = Vec::with_capacity(depth + 1);
    h.push(
        layers
            .layers
            .iter()
            .map(|layer| layer.iter().flat_map(|n| leaf.row(n.index()).iter().copied()).collect())
            .collect(),
    );
    let mut means = Vec::with_capacity(depth);
    let mut pre = Vec::with_capacity(depth);
    for k in 1..=depth {
        let idx = params.registry.agg_index(layers.tag, k);
        let w = &params.tensors.agg_w[idx];
        let b = params.tensors.agg_b[idx].row(0);
        let prev = &h[k - 1];
        let mut h_k = Vec::with_capacity(depth - k + 1);
        let mut m_k = Vec::with_capacity(depth - k + 1);
        let mut z_k = Vec::with_capacity(depth - k + 1);
        for j in 0..=depth - k {
            let n = layers.layers[j].len();
            let f = layers.fanout(j + 1);
            let scale = 1.0 / (1 + f) as f64;
            let mut m = vec![0.0; n * d_h];
            let mut z = vec![0.0; n * d_h];
            for i in 0..n {
                let mi = &mut m[i * d_h..(i + 1) * d_h];
                mi.copy_from_slice(&prev[j][i * d_h..(i + 1) * d_h]);
                for c in i * f..(i + 1) * f {
                    axpy(1.0, &prev[j + 1][c * d_h..(c + 1) * d_h], mi);
                }
                mi.iter_mut().for_each(|x| *x *= scale);
                let zi = &mut z[i * d_h..(i + 1) * d_h];
                mat_vec(w, mi, zi);
                axpy(1.0, b, zi);
            }
            let out = match params.config.activation {
                Activation::Relu => z.iter().map(|&x| x.max(0.0)).collect(),
                Activation::Identity => z.clone(),
            };
            h_k.push(out);
            m_k.push(m);
            z_k.push(z);
        }
        h.push(h_k);
        means.push(m_k);
        pre.push(z_k);
    }
    Ok(AggTrace { h, means, pre })
}

/// `h^{(K)}` of the flow's origin.
pub fn aggregate_flow(params: &ModelParams, layers: &NeighborLayers) -> Result<Vec<f64>> {
    Ok(aggregate_forward(params, layers)?.output().to_vec())
}

/// Accumulates the gradients of one flow into `grads` given `d output`.
pub fn aggregate_backward(params: &ModelParams, layers: &NeighborLayers, trace: &AggTrace, dout: &[f64], grads: &mut Tensors) {
    let d_h = params.dims().d_h;
    let depth = layers.depth();
    let mut dh: Vec<Vec<f64>> = vec![dout.to_vec()];
    for k in (1..=depth).rev() {
        let idx = params.registry.agg_index(layers.tag, k);
        let w = &params.tensors.agg_w[idx];
        let mut dprev: Vec<Vec<f64>> = (0..=depth - k + 1)
            .map(|j| vec![0.0; layers.layers[j].len() * d_h])
            .collect();
        let mut dz = vec![0.0; d_h];
        let mut dm = vec![0.0; d_h];
        for j in 0..=depth - k {
            let n = layers.layers[j].len();
            let f = layers.fanout(j + 1);
            let scale = 1.0 / (1 + f) as f64;
            for i in 0..n {
                let span = i * d_h..(i + 1) * d_h;
                let z = &trace.pre[k - 1][j][span.clone()];
                for ((dzi, &g), &zi) in dz.iter_mut().zip(&dh[j][span.clone()]).zip(z) {
                    *dzi = match params.config.activation {
                        Activation::Relu if zi <= 0.0 => 0.0,
                        _ => g,
                    };
                }
                if dz.iter().all(|&x| x == 0.0) {
                    continue;
                }
                outer_add(&mut grads.agg_w[idx], &dz, &trace.means[k - 1][j][span.clone()]);
                axpy(1.0, &dz, grads.agg_b[idx].row_mut(0));
                dm.iter_mut().for_each(|x| *x = 0.0);
                mat_t_vec_add(w, &dz, &mut dm);
                axpy(scale, &dm, &mut dprev[j][span]);
                for c in i * f..(i + 1) * f {
                    axpy(scale, &dm, &mut dprev[j + 1][c * d_h..(c + 1) * d_h]);
                }
            }
        }
        dh = dprev;
    }
    for (j, layer) in layers.layers.iter().enumerate() {
        for (i, n) in layer.iter().enumerate() {
            axpy(1.0, &dh[j][i * d_h..(i + 1) * d_h], grads.leaf.row_mut(n.index()));
        }
    }
}

/// Intermediates of one self-attention block.
#[derive(Clone, Debug)]
pub struct AttentionTrace {
    pub q: Matrix,
    pub k: Matrix,
    pub v: Matrix,
    /// Row-stochastic attention weights; the identity when attention is
    /// switched off.
    pub weights: Matrix,
    pub out: Matrix,
}

/// `softmax(X Wq (X Wk)^T / sqrt(d_k)) X Wv`. With `enabled == false` the
/// mixing is skipped and the block reduces to `X Wv`.
pub fn attention_forward(x: &Matrix, wq: &Matrix, wk: &Matrix, wv: &Matrix, enabled: bool) -> Result<AttentionTrace> {
    if x.cols() != wq.rows() || x.cols() != wk.rows() || x.cols() != wv.rows() || wq.cols() != wk.cols() {
        return Err(Error::ShapeMismatch(format!(
            "attention input {:?} against weights {:?}/{:?}/{:?}",
            x.shape(),
            wq.shape(),
            wk.shape(),
            wv.shape()
        )));
    }
    let q = x.matmul(wq);
    let k = x.matmul(wk);
    let v = x.matmul(wv);
    if !enabled {
        return Ok(AttentionTrace {
            weights: Matrix::identity(x.rows()),
            out: v.clone(),
            q,
            k,
            v,
        });
    }
    let mut weights = q.matmul_t(&k);
    weights.scale(1.0 / (wq.cols() as f64).sqrt());
    softmax_rows(&mut weights);
    let out = weights.matmul(&v);
    Ok(AttentionTrace { q, k, v, weights, out })
}

/// Reverse pass of [`attention_forward`]. Weight gradients are added to
/// `gq`, `gk`, `gv`; the input gradient is returned.
#[allow(clippy::too_many_arguments)]
pub fn attention_backward(
    x: &Matrix,
    wq: &Matrix,
    wk: &Matrix,
    wv: &Matrix,
    trace: &AttentionTrace,
    dout: &Matrix,
    enabled: bool,
    gq: &mut Matrix,
    gk: &mut Matrix,
    gv: &mut Matrix,
) -> Matrix {
    let dv = trace.weights.t_matmul(dout);
    gv.add_assign(&x.t_matmul(&dv));
    let mut dx = dv.matmul_t(wv);
    if enabled {
        let da = dout.matmul_t(&trace.v);
        let a = &trace.weights;
        let mut ds = Matrix::zeros(a.rows(), a.cols());
        let scale = 1.0 / (wq.cols() as f64).sqrt();
        for i in 0..a.rows() {
            let inner: f64 = a.row(i).iter().zip(da.row(i)).map(|(p, g)| p * g).sum();
            for j in 0..a.cols() {
                ds[(i, j)] = a[(i, j)] * (da[(i, j)] - inner) * scale;
            }
        }
        let dq = ds.matmul(&trace.k);
        let dk = ds.t_matmul(&trace.q);
        gq.add_assign(&x.t_matmul(&dq));
        gk.add_assign(&x.t_matmul(&dk));
        dx.add_assign(&dq.matmul_t(wq));
        dx.add_assign(&dk.matmul_t(wk));
    }
    dx
}

/// Flow-level self-attention over the stacked flow vectors `H` (`c x d_h`).
pub fn metapath_attention(params: &ModelParams, h: &Matrix) -> Result<Matrix> {
    let t = &params.tensors;
    Ok(attention_forward(h, &t.mp_q, &t.mp_k, &t.mp_v, true)?.out)
}

/// Relationship-level self-attention over `U` (`|R| x d_k`).
pub fn relationship_attention(params: &ModelParams, u: &Matrix) -> Result<Matrix> {
    if u.rows() != params.num_relationships() {
        return Err(Error::ShapeMismatch(format!(
            "{} relationship rows for {} relationships",
            u.rows(),
            params.num_relationships()
        )));
    }
    let t = &params.tensors;
    Ok(attention_forward(u, &t.rel_q, &t.rel_k, &t.rel_v, true)?.out)
}

/// Mean of the rows of `h`.
pub fn pool_relationship(h: &Matrix) -> Vec<f64> {
    let mut out = vec![0.0; h.cols()];
    for i in 0..h.rows() {
        axpy(1.0, h.row(i), &mut out);
    }
    let c = h.rows().max(1) as f64;
    out.iter_mut().for_each(|x| *x /= c);
    out
}

/// `base[v] + e_local * out_proj[type, r]`.
pub fn final_embedding(params: &ModelParams, v: NodeId, t: TypeId, r: RelationshipId, e_local: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; params.dims().d];
    vec_mat(e_local, params.out_proj(t, r), &mut out);
    axpy(1.0, params.tensors.base.row(v.index()), &mut out);
    out
}

#[derive(Clone, Debug)]
pub struct RelationshipForward {
    pub flows: Vec<AggTrace>,
    /// Stacked flow outputs, one row per flow.
    pub h: Matrix,
    pub attention: Option<AttentionTrace>,
    pub pooled: Vec<f64>,
}

/// Everything computed for one node.
#[derive(Clone, Debug)]
pub struct NodeForward {
    pub node: NodeId,
    pub node_type: TypeId,
    pub relationships: Vec<RelationshipForward>,
    /// Pooled per-relationship vectors stacked in relationship order.
    pub u: Matrix,
    pub rel_attention: AttentionTrace,
}

impl NodeForward {
    /// Row `r` of the relationship-attention output.
    pub fn local(&self, r: RelationshipId) -> &[f64] {
        self.rel_attention.out.row(r.index())
    }

    pub fn embedding(&self, params: &ModelParams, r: RelationshipId) -> Vec<f64> {
        final_embedding(params, self.node, self.node_type, r, self.local(r))
    }

    /// Average attention mass each flow of relationship `r` receives (column
    /// means of the flow-level attention weights). Sums to one.
    pub fn flow_attention_mass(&self, r: RelationshipId) -> Vec<f64> {
        match &self.relationships[r.index()].attention {
            None => Vec::new(),
            Some(a) => {
                let w = &a.weights;
                (0..w.cols())
                    .map(|j| (0..w.rows()).map(|i| w[(i, j)]).sum::<f64>() / w.rows() as f64)
                    .collect()
            }
        }
    }
}

/// Full forward pass for one node over all relationships.
pub fn forward_node(params: &ModelParams, g: &MultiplexGraph, flows: &NodeFlows) -> Result<NodeForward> {
    if flows.per_relationship.len() != params.num_relationships() {
        return Err(Error::ShapeMismatch(format!(
            "flows for {} relationships, model has {}",
            flows.per_relationship.len(),
            params.num_relationships()
        )));
    }
    let dims = params.dims();
    let t = &params.tensors;
    let ablation = params.config.ablation;
    let mut u = Matrix::zeros(params.num_relationships(), dims.d_k);
    let mut relationships = Vec::with_capacity(params.num_relationships());
    for (r, layers) in flows.per_relationship.iter().enumerate() {
        let traces = layers
            .iter()
            .map(|l| {
                if l.origin != flows.node {
                    return Err(Error::ShapeMismatch("flow origin differs from node".into()));
                }
                aggregate_forward(params, l)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut h = Matrix::zeros(traces.len(), dims.d_h);
        for (i, tr) in traces.iter().enumerate() {
            h.row_mut(i).copy_from_slice(tr.output());
        }
        let (attention, pooled) = if traces.is_empty() {
            (None, vec![0.0; dims.d_k])
        } else {
            let a = attention_forward(&h, &t.mp_q, &t.mp_k, &t.mp_v, ablation.metapath_attention)?;
            let pooled = pool_relationship(&a.out);
            (Some(a), pooled)
        };
        u.row_mut(r).copy_from_slice(&pooled);
        relationships.push(RelationshipForward {
            flows: traces,
            h,
            attention,
            pooled,
        });
    }
    let rel_attention = attention_forward(&u, &t.rel_q, &t.rel_k, &t.rel_v, ablation.relationship_attention)?;
    Ok(NodeForward {
        node: flows.node,
        node_type: g.node_type(flows.node),
        relationships,
        u,
        rel_attention,
    })
}

/// Reverse pass for one node. `d_embedding` is `|R| x d` and holds the loss
/// gradient with respect to each relationship-specific embedding.
pub fn node_backward(params: &ModelParams, fwd: &NodeForward, flows: &NodeFlows, d_embedding: &Matrix, grads: &mut Tensors) {
    let dims = params.dims();
    let ablation = params.config.ablation;
    let v = fwd.node.index();
    let mut d_local = Matrix::zeros(params.num_relationships(), dims.d_k);
    for r in 0..params.num_relationships() {
        let de = d_embedding.row(r);
        if de.iter().all(|&x| x == 0.0) {
            continue;
        }
        axpy(1.0, de, grads.base.row_mut(v));
        let rel = RelationshipId(r as u16);
        let p = params.out_proj_index(fwd.node_type, rel);
        mat_vec(&params.tensors.out_proj[p], de, d_local.row_mut(r));
        outer_add(&mut grads.out_proj[p], fwd.local(rel), de);
    }
    let t = &params.tensors;
    let du = attention_backward(
        &fwd.u,
        &t.rel_q,
        &t.rel_k,
        &t.rel_v,
        &fwd.rel_attention,
        &d_local,
        ablation.relationship_attention,
        &mut grads.rel_q,
        &mut grads.rel_k,
        &mut grads.rel_v,
    );
    for (r, rf) in fwd.relationships.iter().enumerate() {
        let Some(attention) = &rf.attention else { continue };
        let dpooled = du.row(r);
        if dpooled.iter().all(|&x| x == 0.0) {
            continue;
        }
        let c = rf.h.rows();
        let mut dhat = Matrix::zeros(c, dims.d_k);
        for i in 0..c {
            axpy(1.0 / c as f64, dpooled, dhat.row_mut(i));
        }
        let dh = attention_backward(
            &rf.h,
            &t.mp_q,
            &t.mp_k,
            &t.mp_v,
            attention,
            &dhat,
            ablation.metapath_attention,
            &mut grads.mp_q,
            &mut grads.mp_k,
            &mut grads.mp_v,
        );
        for (i, (layers, trace)) in flows.per_relationship[r].iter().zip(&rf.flows).enumerate() {
            aggregate_backward(params, layers, trace, dh.row(i), grads);
        }
    }
}

/// Relationship-`r` embeddings for a batch, one row per node. `stack[i]`
/// must hold the flows of `nodes[i]`.
pub fn forward_batch(
    params: &ModelParams,
    g: &MultiplexGraph,
    nodes: &[NodeId],
    stack: &[NodeFlows],
    r: RelationshipId,
) -> Result<Matrix> {
    if nodes.len() != stack.len() {
        return Err(Error::ShapeMismatch(format!("{} nodes but {} flow entries", nodes.len(), stack.len())));
    }
    if r.index() >= params.num_relationships() {
        return Err(Error::ShapeMismatch(format!("relationship {} out of range", r.0)));
    }
    let mut out = Matrix::zeros(nodes.len(), params.dims().d);
    for (i, (&v, flows)) in nodes.iter().zip(stack).enumerate() {
        if flows.node != v {
            return Err(Error::ShapeMismatch(format!("flow entry {i} belongs to another node")));
        }
        let fwd = forward_node(params, g, flows)?;
        out.row_mut(i).copy_from_slice(&fwd.embedding(params, r));
    }
    Ok(out)
}
