//! Relationship-specific node embeddings for multiplex heterogeneous networks.
//!
//! The pipeline is: a [`graph::MultiplexGraph`] is loaded once and shared
//! read-only; the [`sampler`] draws typed training walks, metapath-guided
//! neighbor layers and randomized inter-relationship layers; the [`model`]
//! aggregates every flow, applies flow-level and relationship-level
//! self-attention and projects to a per-relationship embedding; the
//! [`trainer`] fits everything with a skip-gram negative-sampling objective
//! and the [`eval`] module scores held-out links.

pub mod checkpoint;
pub mod error;
pub mod eval;
pub mod graph;
pub mod linalg;
pub mod model;
pub mod rng;
pub mod sampler;
pub mod trainer;

pub use error::{Error, Result};
pub use graph::{MetapathScheme, MultiplexGraph, NodeId, RelationshipId, TypeId};
