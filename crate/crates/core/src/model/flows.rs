use rand::Rng;

use crate::error::Result;
use crate::graph::{MultiplexGraph, NodeId};
use crate::sampler::{metapath_guided_layers, randomized_exploration_layers, FlowTag, NeighborLayers, SamplerConfig};

use super::{Ablation, SchemeRegistry};

/// Sampled flows of one node: `per_relationship[r]` holds the layers of
/// every applicable scheme under `r` (registry order) followed by the
/// randomized flow.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeFlows {
    pub node: NodeId,
    pub per_relationship: Vec<Vec<NeighborLayers>>,
}

impl NodeFlows {
    /// Nodes whose leaf representation can reach this node's output.
    pub fn receptive_field(&self) -> std::collections::BTreeSet<NodeId> {
        self.per_relationship
            .iter()
            .flatten()
            .flat_map(|l| l.receptive_field())
            .collect()
    }
}

/// One entry per batch node.
pub type FlowStack = Vec<NodeFlows>;

/// Samples all flows of `v` for every relationship.
pub fn sample_node_flows<R: Rng>(
    g: &MultiplexGraph,
    registry: &SchemeRegistry,
    sampler: &SamplerConfig,
    ablation: &Ablation,
    v: NodeId,
    rng: &mut R,
) -> Result<NodeFlows> {
    let t = g.node_type(v);
    let per_relationship = g
        .relationships()
        .map(|r| {
            let mut flows = Vec::new();
            if ablation.metapath_flows {
                for s in registry.applicable(r, t) {
                    flows.push(metapath_guided_layers(
                        g,
                        v,
                        registry.scheme(s),
                        &sampler.fanout,
                        FlowTag::Scheme(s),
                        rng,
                    )?);
                }
            }
            if ablation.randomized_exploration {
                flows.push(randomized_exploration_layers(
                    g,
                    v,
                    sampler.exploration_depth,
                    &sampler.fanout,
                    rng,
                )?);
            }
            Ok(flows)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NodeFlows { node: v, per_relationship })
}
