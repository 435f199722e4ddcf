//! Model parameters and the forward computation.
//!
//! For a node `v` and every relationship `r`, each applicable flow (the
//! metapath schemes registered under `r` that start at `v`'s type, plus the
//! randomized exploration flow) is aggregated bottom-up with a mean
//! aggregator. The flow vectors of one relationship are mixed by
//! self-attention and mean-pooled; the pooled vectors of all relationships
//! are mixed by a second self-attention, and row `r` of the result is
//! projected and added to `v`'s base embedding.

mod flows;
mod forward;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{MetapathScheme, MultiplexGraph, RelationshipId, TypeId};
use crate::linalg::Matrix;
use crate::rng::{self, Domain};
use crate::sampler::FlowTag;

pub use flows::{sample_node_flows, FlowStack, NodeFlows};
pub use forward::{
    aggregate_backward, aggregate_flow, aggregate_forward, attention_backward, attention_forward,
    final_embedding, forward_batch, forward_node, metapath_attention, node_backward, pool_relationship,
    relationship_attention, AggTrace, AttentionTrace, NodeForward, RelationshipForward,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelDims {
    /// Base and final embedding width.
    pub d: usize,
    /// Aggregation width.
    pub d_h: usize,
    /// Attention width (the local edge embedding).
    pub d_k: usize,
}

impl Default for ModelDims {
    fn default() -> Self {
        ModelDims { d: 128, d_h: 8, d_k: 8 }
    }
}

impl ModelDims {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.d_h == 0 || self.d_k == 0 {
            return Err(Error::Config("model dimensions must be positive".into()));
        }
        Ok(())
    }
}

/// Nonlinearity inside the aggregator. `Identity` exists for tests.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Relu,
    Identity,
}

/// Switches for the ablation variants. Everything on is the full model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Ablation {
    pub randomized_exploration: bool,
    pub metapath_flows: bool,
    pub metapath_attention: bool,
    pub relationship_attention: bool,
}

impl Default for Ablation {
    fn default() -> Self {
        Ablation {
            randomized_exploration: true,
            metapath_flows: true,
            metapath_attention: true,
            relationship_attention: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(flatten)]
    pub dims: ModelDims,
    pub activation: Activation,
    pub ablation: Ablation,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            dims: ModelDims::default(),
            activation: Activation::Relu,
            ablation: Ablation::default(),
        }
    }
}

/// A metapath scheme registered under one relationship.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeEntry {
    pub relationship: RelationshipId,
    pub scheme: MetapathScheme,
}

/// All registered schemes, indexed by position. Scheme `s` owns
/// `scheme.len()` aggregator weight sets starting at `agg_offset(s)`; the
/// randomized flow owns a single set shared by all of its steps.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeRegistry {
    entries: Vec<SchemeEntry>,
    num_relationships: usize,
}

impl SchemeRegistry {
    /// `schemes[r]` lists the schemes for relationship `r`.
    pub fn new(g: &MultiplexGraph, schemes: Vec<Vec<MetapathScheme>>) -> Result<Self> {
        if schemes.len() != g.num_relationships() {
            return Err(Error::Config(format!(
                "schemes given for {} relationships, graph has {}",
                schemes.len(),
                g.num_relationships()
            )));
        }
        let mut entries = Vec::new();
        for (r, list) in schemes.into_iter().enumerate() {
            for scheme in list {
                g.validate_scheme(&scheme)?;
                entries.push(SchemeEntry {
                    relationship: RelationshipId(r as u16),
                    scheme,
                });
            }
        }
        Ok(SchemeRegistry {
            entries,
            num_relationships: g.num_relationships(),
        })
    }

    pub fn entries(&self) -> &[SchemeEntry] {
        &self.entries
    }

    pub fn num_relationships(&self) -> usize {
        self.num_relationships
    }

    pub fn scheme(&self, s: usize) -> &MetapathScheme {
        &self.entries[s].scheme
    }

    /// Indices of schemes registered under `r` that start at type `t`.
    pub fn applicable(&self, r: RelationshipId, t: TypeId) -> impl Iterator<Item = usize> + '_ {
        self.entries
            .iter()
            .enumerate()
            .filter(move |(_, e)| e.relationship == r && e.scheme.start_type() == t)
            .map(|(i, _)| i)
    }

    pub fn for_relationship(&self, r: RelationshipId) -> impl Iterator<Item = usize> + '_ {
        self.entries
            .iter()
            .enumerate()
            .filter(move |(_, e)| e.relationship == r)
            .map(|(i, _)| i)
    }

    fn agg_offset(&self, s: usize) -> usize {
        self.entries[..s].iter().map(|e| e.scheme.len()).sum()
    }

    /// Total number of aggregator weight sets.
    pub fn num_agg_sets(&self) -> usize {
        self.agg_offset(self.entries.len()) + 1
    }

    /// Weight set used at 1-based step `k` of flow `tag`.
    pub fn agg_index(&self, tag: FlowTag, k: usize) -> usize {
        match tag {
            FlowTag::Scheme(s) => self.agg_offset(s) + k - 1,
            FlowTag::Random => self.num_agg_sets() - 1,
        }
    }
}

/// Every learnable tensor. Also used for gradients and optimizer moments,
/// which share the layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tensors {
    /// `|V| x d` base embeddings.
    pub base: Matrix,
    /// `|V| x d_h` layer-0 representations read at the leaves of every flow.
    pub leaf: Matrix,
    /// `|V| x d` skip-gram context embeddings.
    pub context: Matrix,
    /// Aggregator weights `d_h x d_h`, one per weight set.
    pub agg_w: Vec<Matrix>,
    /// Aggregator biases `1 x d_h`.
    pub agg_b: Vec<Matrix>,
    pub mp_q: Matrix,
    pub mp_k: Matrix,
    pub mp_v: Matrix,
    pub rel_q: Matrix,
    pub rel_k: Matrix,
    pub rel_v: Matrix,
    /// `d_k x d` projections, index `node_type * |R| + relationship`.
    pub out_proj: Vec<Matrix>,
}

impl Tensors {
    pub fn zeros(num_nodes: usize, num_types: usize, num_relationships: usize, agg_sets: usize, dims: ModelDims) -> Self {
        let ModelDims { d, d_h, d_k } = dims;
        Tensors {
            base: Matrix::zeros(num_nodes, d),
            leaf: Matrix::zeros(num_nodes, d_h),
            context: Matrix::zeros(num_nodes, d),
            agg_w: vec![Matrix::zeros(d_h, d_h); agg_sets],
            agg_b: vec![Matrix::zeros(1, d_h); agg_sets],
            mp_q: Matrix::zeros(d_h, d_k),
            mp_k: Matrix::zeros(d_h, d_k),
            mp_v: Matrix::zeros(d_h, d_k),
            rel_q: Matrix::zeros(d_k, d_k),
            rel_k: Matrix::zeros(d_k, d_k),
            rel_v: Matrix::zeros(d_k, d_k),
            out_proj: vec![Matrix::zeros(d_k, d); num_types * num_relationships],
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut out = self.clone();
        out.visit_mut(|_, m| m.fill(0.0));
        out
    }

    /// Tensor names in canonical (checkpoint) order.
    pub fn names(&self) -> Vec<String> {
        let mut names = vec!["base".to_string(), "leaf".into(), "context".into()];
        names.extend((0..self.agg_w.len()).map(|i| format!("agg_w.{i}")));
        names.extend((0..self.agg_b.len()).map(|i| format!("agg_b.{i}")));
        names.extend(["mp_q", "mp_k", "mp_v", "rel_q", "rel_k", "rel_v"].map(String::from));
        names.extend((0..self.out_proj.len()).map(|i| format!("out_proj.{i}")));
        names
    }

    /// Tensors in canonical order, parallel to [`Tensors::names`].
    pub fn list(&self) -> Vec<&Matrix> {
        let mut out = vec![&self.base, &self.leaf, &self.context];
        out.extend(&self.agg_w);
        out.extend(&self.agg_b);
        out.extend([&self.mp_q, &self.mp_k, &self.mp_v, &self.rel_q, &self.rel_k, &self.rel_v]);
        out.extend(&self.out_proj);
        out
    }

    pub fn list_mut(&mut self) -> Vec<&mut Matrix> {
        let mut out = vec![&mut self.base, &mut self.leaf, &mut self.context];
        out.extend(&mut self.agg_w);
        out.extend(&mut self.agg_b);
        out.extend([
            &mut self.mp_q,
            &mut self.mp_k,
            &mut self.mp_v,
            &mut self.rel_q,
            &mut self.rel_k,
            &mut self.rel_v,
        ]);
        out.extend(&mut self.out_proj);
        out
    }

    pub fn visit(&self, mut f: impl FnMut(String, &Matrix)) {
        for (name, m) in self.names().into_iter().zip(self.list()) {
            f(name, m);
        }
    }

    pub fn visit_mut(&mut self, mut f: impl FnMut(String, &mut Matrix)) {
        for (name, m) in self.names().into_iter().zip(self.list_mut()) {
            f(name, m);
        }
    }

    pub fn names_and_shapes(&self) -> Vec<(String, (usize, usize))> {
        let mut out = Vec::new();
        self.visit(|n, m| out.push((n, m.shape())));
        out
    }

    pub fn is_finite(&self) -> bool {
        let mut ok = true;
        self.visit(|_, m| ok &= m.is_finite());
        ok
    }

    pub fn num_scalars(&self) -> usize {
        let mut n = 0;
        self.visit(|_, m| n += m.as_slice().len());
        n
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub registry: SchemeRegistry,
    pub num_types: usize,
    pub tensors: Tensors,
}

impl ModelParams {
    pub fn dims(&self) -> ModelDims {
        self.config.dims
    }

    pub fn num_nodes(&self) -> usize {
        self.tensors.base.rows()
    }

    pub fn num_relationships(&self) -> usize {
        self.registry.num_relationships()
    }

    pub fn out_proj(&self, t: TypeId, r: RelationshipId) -> &Matrix {
        &self.tensors.out_proj[t.index() * self.num_relationships() + r.index()]
    }

    pub fn out_proj_index(&self, t: TypeId, r: RelationshipId) -> usize {
        t.index() * self.num_relationships() + r.index()
    }

    /// Checks that the parameters fit `g`'s node, type and relationship counts.
    pub fn check_graph(&self, g: &MultiplexGraph) -> Result<()> {
        if self.num_nodes() != g.num_nodes()
            || self.num_types != g.num_types()
            || self.num_relationships() != g.num_relationships()
        {
            return Err(Error::SchemaMismatch(format!(
                "parameters cover {} nodes, {} types, {} relationships; graph has {}, {}, {}",
                self.num_nodes(),
                self.num_types,
                self.num_relationships(),
                g.num_nodes(),
                g.num_types(),
                g.num_relationships()
            )));
        }
        Ok(())
    }

    /// Rounds every entry to the nearest `f32`, the checkpoint precision.
    pub fn round_to_f32(&mut self) {
        self.tensors
            .visit_mut(|_, m| m.as_mut_slice().iter_mut().for_each(|x| *x = *x as f32 as f64));
    }
}

/// Fresh parameters: embedding tables uniform in `(-0.5/w, 0.5/w)` for table
/// width `w`, weight matrices Xavier-uniform, biases zero.
pub fn init_params(config: &ModelConfig, g: &MultiplexGraph, registry: SchemeRegistry, seed: u64) -> Result<ModelParams> {
    config.dims.validate()?;
    let mut tensors = Tensors::zeros(
        g.num_nodes(),
        g.num_types(),
        g.num_relationships(),
        registry.num_agg_sets(),
        config.dims,
    );
    let mut rng = rng::stream(seed, Domain::Init, 0, 0, 0);
    tensors.visit_mut(|name, m| {
        let (rows, cols) = m.shape();
        let bound = match name.as_str() {
            "base" | "leaf" | "context" => 0.5 / cols as f64,
            n if n.starts_with("agg_b") => 0.0,
            _ => (6.0 / (rows + cols) as f64).sqrt(),
        };
        if bound > 0.0 {
            for x in m.as_mut_slice() {
                *x = rng.random_range(-bound..bound);
            }
        }
    });
    Ok(ModelParams {
        config: config.clone(),
        registry,
        num_types: g.num_types(),
        tensors,
    })
}
