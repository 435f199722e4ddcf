//! Skip-gram training with heterogeneous negative sampling.
//!
//! A pair `(center, context, r)` contributes
//! `-log σ(c_context · e*_{center,r}) - Σ_k log σ(-c_k · e*_{center,r})`
//! where the `c_k` are negatives of the context's node type. The batch loss
//! is the mean over pairs; gradients flow through the whole forward pass and
//! are applied with Adam.

use std::collections::{BTreeSet, HashMap};
use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{self, EdgeSplit};
use crate::graph::{MultiplexGraph, NodeId};
use crate::linalg::{axpy, dot, Matrix};
use crate::model::{forward_node, init_params, node_backward, sample_node_flows, ModelConfig, ModelParams, NodeFlows, SchemeRegistry, Tensors};
use crate::rng::{self, Domain};
use crate::sampler::{context_pairs, relationship_walks, training_walks, ContextPair, NegativeSampler, SamplerConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 2048,
            learning_rate: 5e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            max_epochs: 100,
            patience: 5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.max_epochs == 0 || self.patience == 0 {
            return Err(Error::Config("batch_size, max_epochs and patience must be positive".into()));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 || !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Config("learning rate must be positive and betas in [0, 1)".into()));
        }
        Ok(())
    }
}

/// `ln(1e-12)`: floor for the log-sigmoid terms.
const LOG_FLOOR: f64 = -27.631_021_115_928_547;

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log σ(x)` floored at `ln(1e-12)`, and its derivative (zero where the
/// floor engages).
fn log_sigmoid(x: f64) -> (f64, f64) {
    let value = if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    };
    if value < LOG_FLOOR {
        (LOG_FLOOR, 0.0)
    } else {
        (value, 1.0 - sigmoid(x))
    }
}

/// Loss of one pair given the center's relationship-specific embedding.
pub fn pair_loss(e_star: &[f64], ctx: NodeId, negatives: &[NodeId], params: &ModelParams) -> f64 {
    let c = &params.tensors.context;
    let mut loss = -log_sigmoid(dot(c.row(ctx.index()), e_star)).0;
    for &k in negatives {
        loss -= log_sigmoid(-dot(c.row(k.index()), e_star)).0;
    }
    loss
}

/// Adds the gradient of `scale * pair_loss` to `d_e` and `grads.context`.
fn pair_backward(e_star: &[f64], ctx: NodeId, negatives: &[NodeId], scale: f64, params: &ModelParams, d_e: &mut [f64], grads: &mut Tensors) -> f64 {
    let c = &params.tensors.context;
    let s = dot(c.row(ctx.index()), e_star);
    let (ls, dls) = log_sigmoid(s);
    let mut loss = -ls;
    // d(-log σ(s))/ds = -(1 - σ(s))
    let g = -dls * scale;
    axpy(g, c.row(ctx.index()), d_e);
    axpy(g, e_star, grads.context.row_mut(ctx.index()));
    for &k in negatives {
        let s = dot(c.row(k.index()), e_star);
        let (ls, dls) = log_sigmoid(-s);
        loss -= ls;
        // d(-log σ(-s))/ds = 1 - σ(-s)
        let g = dls * scale;
        axpy(g, c.row(k.index()), d_e);
        axpy(g, e_star, grads.context.row_mut(k.index()));
    }
    loss
}

/// Mean loss over `pairs` and its exact gradient. `stack` holds the flows of
/// every distinct center; `negatives[i]` belongs to `pairs[i]`.
pub fn batch_gradients(
    params: &ModelParams,
    g: &MultiplexGraph,
    pairs: &[ContextPair],
    stack: &[NodeFlows],
    negatives: &[Vec<NodeId>],
) -> Result<(f64, Tensors)> {
    if pairs.len() != negatives.len() {
        return Err(Error::ShapeMismatch(format!("{} pairs but {} negative lists", pairs.len(), negatives.len())));
    }
    let mut grads = params.tensors.zeros_like();
    if pairs.is_empty() {
        return Ok((0.0, grads));
    }
    let position: HashMap<NodeId, usize> = stack.iter().enumerate().map(|(i, f)| (f.node, i)).collect();
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); stack.len()];
    for (i, p) in pairs.iter().enumerate() {
        let &slot = position
            .get(&p.center)
            .ok_or_else(|| Error::ShapeMismatch(format!("no flows for center {:?}", p.center)))?;
        groups[slot].push(i);
    }
    let scale = 1.0 / pairs.len() as f64;
    let d = params.dims().d;
    let mut total = 0.0;
    for (flows, members) in stack.iter().zip(&groups) {
        if members.is_empty() {
            continue;
        }
        let fwd = forward_node(params, g, flows)?;
        let mut embeddings: Vec<Option<Vec<f64>>> = vec![None; params.num_relationships()];
        let mut d_emb = Matrix::zeros(params.num_relationships(), d);
        for &i in members {
            let p = &pairs[i];
            let r = p.relationship;
            let e = embeddings[r.index()].get_or_insert_with(|| fwd.embedding(params, r));
            total += pair_backward(e, p.context, &negatives[i], scale, params, d_emb.row_mut(r.index()), &mut grads);
        }
        node_backward(params, &fwd, flows, &d_emb, &mut grads);
    }
    let loss = total * scale;
    if !loss.is_finite() || !grads.is_finite() {
        return Err(Error::NonFiniteLoss);
    }
    Ok((loss, grads))
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Tensors,
    pub v: Tensors,
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &ModelParams) -> Self {
        AdamState {
            m: params.tensors.zeros_like(),
            v: params.tensors.zeros_like(),
            t: 0,
        }
    }
}

/// One bias-corrected Adam update.
pub fn adam_step(params: &mut ModelParams, grads: &Tensors, state: &mut AdamState, cfg: &TrainConfig) {
    state.t += 1;
    let (b1, b2) = (cfg.beta1, cfg.beta2);
    let c1 = 1.0 - b1.powi(state.t as i32);
    let c2 = 1.0 - b2.powi(state.t as i32);
    let lr = cfg.learning_rate;
    let eps = cfg.epsilon;
    let ps = params.tensors.list_mut();
    let gs = grads.list();
    let ms = state.m.list_mut();
    let vs = state.v.list_mut();
    for (((p, g), m), v) in ps.into_iter().zip(gs).zip(ms).zip(vs) {
        let p = p.as_mut_slice();
        let m = m.as_mut_slice();
        let v = v.as_mut_slice();
        for (i, &gi) in g.as_slice().iter().enumerate() {
            m[i] = b1 * m[i] + (1.0 - b1) * gi;
            v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
            if m[i] != 0.0 {
                p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Continue,
    Stop,
}

/// Stops once `patience` consecutive epochs fail to beat the best score.
#[derive(Clone, Debug)]
pub struct EarlyStopping {
    patience: usize,
    best: Option<(usize, f64)>,
    since_best: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        EarlyStopping {
            patience,
            best: None,
            since_best: 0,
        }
    }

    pub fn observe(&mut self, epoch: usize, score: f64) -> StopDecision {
        match self.best {
            Some((_, best)) if score <= best || score.is_nan() => {
                self.since_best += 1;
                if self.since_best >= self.patience {
                    StopDecision::Stop
                } else {
                    StopDecision::Continue
                }
            }
            _ => {
                self.best = Some((epoch, score));
                self.since_best = 0;
                StopDecision::Improved
            }
        }
    }

    pub fn best(&self) -> Option<(usize, f64)> {
        self.best
    }
}

/// One line of the training log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_loss: f64,
    pub val_roc_auc: f64,
    pub seconds: f64,
    pub best_so_far: f64,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters of the best validation epoch, rounded to `f32`.
    pub params: ModelParams,
    pub best_epoch: usize,
    pub log: Vec<EpochRecord>,
}

/// Everything training needs besides the validation data.
#[derive(Clone, Debug)]
pub struct TrainSetup<'a> {
    /// The graph walks and flows are sampled from (the training subgraph).
    pub graph: &'a MultiplexGraph,
    pub registry: SchemeRegistry,
    pub model: ModelConfig,
    pub sampler: SamplerConfig,
    pub train: TrainConfig,
}

/// Skip-gram pairs for every relationship. Walks follow the relationship's
/// intra-relationship cyclic schemes; a relationship without one gets
/// untyped walks.
pub fn training_pairs(g: &MultiplexGraph, registry: &SchemeRegistry, sampler: &SamplerConfig) -> Result<Vec<ContextPair>> {
    let mut pairs = Vec::new();
    for r in g.relationships() {
        let mut seen = BTreeSet::new();
        let schemes: Vec<_> = registry
            .for_relationship(r)
            .map(|s| registry.scheme(s))
            .filter(|s| s.is_intra() && s.is_cyclic() && s.relationships()[0] == r)
            .filter(|s| seen.insert((*s).clone()))
            .collect();
        if schemes.is_empty() {
            pairs.extend(context_pairs(&relationship_walks(g, r, sampler), sampler.window));
        } else {
            for s in schemes {
                let walks = training_walks(g, r, s, sampler)?;
                pairs.extend(context_pairs(&walks, sampler.window));
            }
        }
    }
    Ok(pairs)
}

/// Trains with validation ROC-AUC on `split` driving early stopping.
pub fn train(setup: &TrainSetup<'_>, split: &EdgeSplit) -> Result<TrainOutcome> {
    let seed = setup.train.seed;
    train_with_validator(setup, |params| {
        eval::validation_roc_auc(params, setup.graph, split, &setup.sampler, seed)
    })
}

/// Training loop with a caller-supplied validation score (higher is better).
pub fn train_with_validator<F>(setup: &TrainSetup<'_>, mut validate: F) -> Result<TrainOutcome>
where
    F: FnMut(&ModelParams) -> Result<f64>,
{
    setup.train.validate()?;
    setup.sampler.validate()?;
    let g = setup.graph;
    let cfg = &setup.train;
    let seed = cfg.seed;
    let pairs = training_pairs(g, &setup.registry, &setup.sampler)?;
    if pairs.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let negatives = NegativeSampler::new(g);
    let mut params = init_params(&setup.model, g, setup.registry.clone(), seed)?;
    let mut adam = AdamState::new(&params);
    let mut stopper = EarlyStopping::new(cfg.patience);
    let mut best = params.clone();
    let mut log = Vec::new();

    for epoch in 1..=cfg.max_epochs {
        let started = Instant::now();
        let mut order: Vec<usize> = (0..pairs.len()).collect();
        order.shuffle(&mut rng::stream(seed, Domain::Shuffle, epoch as u64, 0, 0));
        let mut loss_sum = 0.0;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<ContextPair> = chunk.iter().map(|&i| pairs[i]).collect();
            let centers: Vec<NodeId> = batch.iter().map(|p| p.center).collect::<BTreeSet<_>>().into_iter().collect();
            let stack = centers
                .par_iter()
                .map(|&c| {
                    let mut rng = rng::stream(seed, Domain::TrainFlows, epoch as u64, b as u64, c.0 as u64);
                    sample_node_flows(g, &setup.registry, &setup.sampler, &setup.model.ablation, c, &mut rng)
                })
                .collect::<Result<Vec<_>>>()?;
            let negs = batch
                .par_iter()
                .enumerate()
                .map(|(i, p)| {
                    let mut rng = rng::stream(seed, Domain::Negatives, epoch as u64, b as u64, i as u64);
                    negatives.sample(p.context, setup.sampler.negatives, &mut rng)
                })
                .collect::<Result<Vec<_>>>()?;
            let (loss, grads) = batch_gradients(&params, g, &batch, &stack, &negs)?;
            loss_sum += loss * batch.len() as f64;
            adam_step(&mut params, &grads, &mut adam, cfg);
        }
        let score = validate(&params)?;
        let decision = stopper.observe(epoch, score);
        if decision == StopDecision::Improved {
            best = params.clone();
        }
        log.push(EpochRecord {
            epoch,
            mean_loss: loss_sum / pairs.len() as f64,
            val_roc_auc: score,
            seconds: started.elapsed().as_secs_f64(),
            best_so_far: stopper.best().map_or(score, |(_, s)| s),
            seed,
        });
        log::trace_epoch(log.last().unwrap());
        if decision == StopDecision::Stop {
            break;
        }
    }
    best.round_to_f32();
    Ok(TrainOutcome {
        params: best,
        best_epoch: stopper.best().map_or(0, |(e, _)| e),
        log,
    })
}

mod log {
    use super::EpochRecord;

    pub(super) fn trace_epoch(record: &EpochRecord) {
        if std::env::var_os("HYBRIDGNN_VERBOSE").is_some() {
            eprintln!(
                "epoch {:>3}  loss {:.5}  val roc-auc {:.4}  ({:.1}s)",
                record.epoch, record.mean_loss, record.val_roc_auc, record.seconds
            );
        }
    }
}
