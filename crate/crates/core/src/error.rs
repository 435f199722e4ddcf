use thiserror::Error;

use crate::graph::{NodeId, RelationshipId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("edge endpoint `{0}` has no node type")]
    UnknownNode(String),
    #[error("graph has no edges")]
    EmptyGraph,
    #[error("node `{node}` assigned both type `{first}` and `{second}`")]
    DuplicateTypeAssignment {
        node: String,
        first: String,
        second: String,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("scheme violates graph schema at step {index}")]
    SchemaViolation { index: usize },
    #[error("invalid metapath scheme: {0}")]
    InvalidScheme(String),
    #[error("no node of the scheme's start type")]
    NoValidStartNodes,
    #[error("node {node:?} has type {actual}, scheme starts at {expected}")]
    TypeMismatch {
        node: NodeId,
        expected: usize,
        actual: usize,
    },
    #[error("node {0:?} is the only node of its type; no negative can be drawn")]
    TypeExhausted(NodeId),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("loss is not finite")]
    NonFiniteLoss,
    #[error("no training pairs could be generated")]
    EmptyTrainingSet,
    #[error("relationship {relationship:?} has {count} edges, at least 20 are needed")]
    TooFewEdges {
        relationship: RelationshipId,
        count: usize,
    },
    #[error("metric undefined: only one class present")]
    SingleClass,
    #[error("metric undefined: no positive labels")]
    NoPositives,
    #[error("unknown relationship `{0}`")]
    UnknownRelationship(String),
    #[error("checkpoint does not match graph: {0}")]
    SchemaMismatch(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
