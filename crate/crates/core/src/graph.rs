//! Immutable multiplex heterogeneous graph.
//!
//! Nodes carry exactly one type, edges carry exactly one relationship, and a
//! node pair may be joined under several relationships at once. Adjacency is
//! kept per relationship in CSR form with sorted, duplicate-free neighbor
//! lists. Edges are undirected: every input edge is stored in both
//! directions.
//!
//! Labels are mapped to dense ids in sorted label order, so the ids (and the
//! relationship order used downstream) do not depend on the order of the
//! input records.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TypeId(pub u16);

impl TypeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RelationshipId(pub u16);

impl RelationshipId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// One line of an edge file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeRecord {
    pub src: String,
    pub dst: String,
    pub relationship: String,
}

impl EdgeRecord {
    pub fn new(src: impl Into<String>, dst: impl Into<String>, relationship: impl Into<String>) -> Self {
        EdgeRecord {
            src: src.into(),
            dst: dst.into(),
            relationship: relationship.into(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct Csr {
    offsets: Vec<usize>,
    targets: Vec<NodeId>,
}

impl Csr {
    fn from_sorted_lists(lists: Vec<Vec<NodeId>>) -> Self {
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        let mut targets = Vec::with_capacity(lists.iter().map(Vec::len).sum());
        offsets.push(0);
        for list in lists {
            targets.extend(list);
            offsets.push(targets.len());
        }
        Csr { offsets, targets }
    }

    #[inline]
    fn row(&self, v: usize) -> &[NodeId] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiplexGraph {
    node_labels: Vec<String>,
    node_types: Vec<TypeId>,
    type_names: Vec<String>,
    relationship_names: Vec<String>,
    adjacency: Vec<Csr>,
    schema: BTreeSet<(TypeId, RelationshipId, TypeId)>,
    nodes_by_type: Vec<Vec<NodeId>>,
}

/// Builds a graph from labelled edge and node-type records.
///
/// Every edge endpoint must have a type record. Nodes that only appear in
/// the type records become isolated nodes. Self-loops are dropped and
/// repeated edges collapse to one.
pub fn load_graph<E, T>(edge_records: E, type_records: T) -> Result<MultiplexGraph>
where
    E: IntoIterator<Item = EdgeRecord>,
    T: IntoIterator<Item = (String, String)>,
{
    let mut node_type_label: BTreeMap<String, String> = BTreeMap::new();
    for (node, ty) in type_records {
        if let Some(previous) = node_type_label.get(&node) {
            if *previous != ty {
                return Err(Error::DuplicateTypeAssignment {
                    node,
                    first: previous.clone(),
                    second: ty,
                });
            }
            continue;
        }
        node_type_label.insert(node, ty);
    }

    let edges: Vec<EdgeRecord> = edge_records.into_iter().collect();
    if edges.is_empty() {
        return Err(Error::EmptyGraph);
    }
    for e in &edges {
        for endpoint in [&e.src, &e.dst] {
            if !node_type_label.contains_key(endpoint) {
                return Err(Error::UnknownNode(endpoint.clone()));
            }
        }
    }

    let type_names: Vec<String> = node_type_label
        .values()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let relationship_names: Vec<String> = edges
        .iter()
        .map(|e| e.relationship.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    // BTreeMap iteration is sorted, so ids follow label order.
    let node_labels: Vec<String> = node_type_label.keys().cloned().collect();
    let node_types: Vec<TypeId> = node_type_label
        .values()
        .map(|t| TypeId(type_names.binary_search(t).unwrap() as u16))
        .collect();

    let lookup = |label: &str| NodeId(node_labels.binary_search_by(|l| l.as_str().cmp(label)).unwrap() as u32);
    let id_edges: Vec<(RelationshipId, NodeId, NodeId)> = edges
        .iter()
        .map(|e| {
            let r = relationship_names.binary_search(&e.relationship).unwrap();
            (RelationshipId(r as u16), lookup(&e.src), lookup(&e.dst))
        })
        .collect();

    Ok(MultiplexGraph::from_id_edges(
        node_labels,
        node_types,
        type_names,
        relationship_names,
        &id_edges,
    ))
}

impl MultiplexGraph {
    /// Builds a graph over an existing id space. Used for derived graphs such
    /// as the training subgraph of an edge split.
    pub fn from_id_edges(
        node_labels: Vec<String>,
        node_types: Vec<TypeId>,
        type_names: Vec<String>,
        relationship_names: Vec<String>,
        edges: &[(RelationshipId, NodeId, NodeId)],
    ) -> Self {
        let n = node_labels.len();
        assert_eq!(n, node_types.len());
        let mut lists: Vec<Vec<Vec<NodeId>>> = vec![vec![Vec::new(); n]; relationship_names.len()];
        for &(r, a, b) in edges {
            if a == b {
                continue;
            }
            lists[r.index()][a.index()].push(b);
            lists[r.index()][b.index()].push(a);
        }
        let mut schema = BTreeSet::new();
        let adjacency = lists
            .into_iter()
            .enumerate()
            .map(|(r, mut per_node)| {
                for (v, list) in per_node.iter_mut().enumerate() {
                    list.sort_unstable();
                    list.dedup();
                    for w in list.iter() {
                        schema.insert((node_types[v], RelationshipId(r as u16), node_types[w.index()]));
                    }
                }
                Csr::from_sorted_lists(per_node)
            })
            .collect();
        let mut nodes_by_type = vec![Vec::new(); type_names.len()];
        for (v, t) in node_types.iter().enumerate() {
            nodes_by_type[t.index()].push(NodeId(v as u32));
        }
        MultiplexGraph {
            node_labels,
            node_types,
            type_names,
            relationship_names,
            adjacency,
            schema,
            nodes_by_type,
        }
    }

    /// Same nodes, types and relationships, different edge set.
    pub fn with_edges(&self, edges: &[(RelationshipId, NodeId, NodeId)]) -> Self {
        Self::from_id_edges(
            self.node_labels.clone(),
            self.node_types.clone(),
            self.type_names.clone(),
            self.relationship_names.clone(),
            edges,
        )
    }

    pub fn num_nodes(&self) -> usize {
        self.node_labels.len()
    }

    pub fn num_types(&self) -> usize {
        self.type_names.len()
    }

    pub fn num_relationships(&self) -> usize {
        self.relationship_names.len()
    }

    /// Number of undirected edges under `r`.
    pub fn num_edges(&self, r: RelationshipId) -> usize {
        self.adjacency[r.index()].targets.len() / 2
    }

    /// Number of undirected edges summed over relationships; a pair joined
    /// under two relationships counts twice.
    pub fn total_edges(&self) -> usize {
        self.relationships().map(|r| self.num_edges(r)).sum()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.num_nodes() as u32).map(NodeId)
    }

    pub fn relationships(&self) -> impl Iterator<Item = RelationshipId> {
        (0..self.relationship_names.len() as u16).map(RelationshipId)
    }

    pub fn node_type(&self, v: NodeId) -> TypeId {
        self.node_types[v.index()]
    }

    pub fn node_types(&self) -> &[TypeId] {
        &self.node_types
    }

    pub fn node_label(&self, v: NodeId) -> &str {
        &self.node_labels[v.index()]
    }

    pub fn node_labels(&self) -> &[String] {
        &self.node_labels
    }

    pub fn type_name(&self, t: TypeId) -> &str {
        &self.type_names[t.index()]
    }

    pub fn type_names(&self) -> &[String] {
        &self.type_names
    }

    pub fn relationship_name(&self, r: RelationshipId) -> &str {
        &self.relationship_names[r.index()]
    }

    pub fn relationship_names(&self) -> &[String] {
        &self.relationship_names
    }

    pub fn node_id(&self, label: &str) -> Option<NodeId> {
        self.node_labels
            .binary_search_by(|l| l.as_str().cmp(label))
            .ok()
            .map(|i| NodeId(i as u32))
    }

    pub fn type_id(&self, label: &str) -> Option<TypeId> {
        self.type_names
            .binary_search_by(|l| l.as_str().cmp(label))
            .ok()
            .map(|i| TypeId(i as u16))
    }

    pub fn relationship_id(&self, label: &str) -> Option<RelationshipId> {
        self.relationship_names
            .binary_search_by(|l| l.as_str().cmp(label))
            .ok()
            .map(|i| RelationshipId(i as u16))
    }

    /// Neighbors of `v` under `r`, sorted by id.
    #[inline]
    pub fn neighbors(&self, v: NodeId, r: RelationshipId) -> &[NodeId] {
        self.adjacency[r.index()].row(v.index())
    }

    /// Relationships under which `v` has at least one neighbor, in id order.
    pub fn available_relationships(&self, v: NodeId) -> Vec<RelationshipId> {
        self.relationships()
            .filter(|&r| !self.neighbors(v, r).is_empty())
            .collect()
    }

    pub fn has_edge(&self, r: RelationshipId, a: NodeId, b: NodeId) -> bool {
        self.neighbors(a, r).binary_search(&b).is_ok()
    }

    /// Degree of `v` summed over all relationships.
    pub fn degree(&self, v: NodeId) -> usize {
        self.relationships().map(|r| self.neighbors(v, r).len()).sum()
    }

    pub fn nodes_of_type(&self, t: TypeId) -> &[NodeId] {
        &self.nodes_by_type[t.index()]
    }

    /// Observed (source type, relationship, target type) triples. Both
    /// orientations of every edge are present.
    pub fn schema(&self) -> &BTreeSet<(TypeId, RelationshipId, TypeId)> {
        &self.schema
    }

    /// Undirected edges under `r` as `(a, b)` with `a < b`, in id order.
    pub fn edges(&self, r: RelationshipId) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.nodes().flat_map(move |a| {
            self.neighbors(a, r)
                .iter()
                .filter(move |&&b| a < b)
                .map(move |&b| (a, b))
        })
    }

    /// Checks every `(o_{i-1}, r_i, o_i)` step of `scheme` against the
    /// observed schema. The error carries the 1-based index of the first
    /// offending step.
    pub fn validate_scheme(&self, scheme: &MetapathScheme) -> Result<()> {
        for i in 1..=scheme.len() {
            let src = scheme.node_types[i - 1];
            let rel = scheme.relationships[i - 1];
            let dst = scheme.node_types[i];
            let known = src.index() < self.num_types()
                && dst.index() < self.num_types()
                && rel.index() < self.num_relationships();
            if !known || !self.schema.contains(&(src, rel, dst)) {
                return Err(Error::SchemaViolation { index: i });
            }
        }
        Ok(())
    }
}

/// A typed path template `o_0 -r_1-> o_1 -r_2-> ... -r_n-> o_n`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MetapathScheme {
    node_types: Vec<TypeId>,
    relationships: Vec<RelationshipId>,
}

impl MetapathScheme {
    pub fn new(node_types: Vec<TypeId>, relationships: Vec<RelationshipId>) -> Result<Self> {
        if relationships.is_empty() {
            return Err(Error::InvalidScheme("a scheme needs at least one step".into()));
        }
        if node_types.len() != relationships.len() + 1 {
            return Err(Error::InvalidScheme(format!(
                "{} node types for {} relationships",
                node_types.len(),
                relationships.len()
            )));
        }
        Ok(MetapathScheme {
            node_types,
            relationships,
        })
    }

    /// Scheme whose every step uses relationship `r`.
    pub fn intra(node_types: Vec<TypeId>, r: RelationshipId) -> Result<Self> {
        let steps = node_types.len().saturating_sub(1);
        Self::new(node_types, vec![r; steps])
    }

    /// Parses `U-I-U` (every step under `default_relationship`) or
    /// `V-U-A|like,comment` (explicit per-step relationships).
    pub fn parse(g: &MultiplexGraph, text: &str, default_relationship: RelationshipId) -> Result<Self> {
        let (types_part, rels_part) = match text.split_once('|') {
            Some((t, r)) => (t, Some(r)),
            None => (text, None),
        };
        let node_types = types_part
            .split('-')
            .map(|t| {
                g.type_id(t.trim())
                    .ok_or_else(|| Error::InvalidScheme(format!("unknown node type `{}` in `{text}`", t.trim())))
            })
            .collect::<Result<Vec<_>>>()?;
        match rels_part {
            None => Self::intra(node_types, default_relationship),
            Some(rels) => {
                let relationships = rels
                    .split(',')
                    .map(|r| {
                        g.relationship_id(r.trim())
                            .ok_or_else(|| Error::UnknownRelationship(r.trim().to_string()))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Self::new(node_types, relationships)
            }
        }
    }

    /// Number of steps.
    pub fn len(&self) -> usize {
        self.relationships.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relationships.is_empty()
    }

    pub fn node_types(&self) -> &[TypeId] {
        &self.node_types
    }

    pub fn relationships(&self) -> &[RelationshipId] {
        &self.relationships
    }

    pub fn start_type(&self) -> TypeId {
        self.node_types[0]
    }

    pub fn is_intra(&self) -> bool {
        self.relationships.windows(2).all(|w| w[0] == w[1])
    }

    /// First and last node types coincide, so the scheme can be repeated.
    pub fn is_cyclic(&self) -> bool {
        self.node_types.first() == self.node_types.last()
    }

    /// Human-readable form using the graph's labels, inverse of [`parse`].
    ///
    /// [`parse`]: MetapathScheme::parse
    pub fn display<'a>(&'a self, g: &'a MultiplexGraph) -> SchemeDisplay<'a> {
        SchemeDisplay { scheme: self, graph: g }
    }
}

pub struct SchemeDisplay<'a> {
    scheme: &'a MetapathScheme,
    graph: &'a MultiplexGraph,
}

impl fmt::Display for SchemeDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let types: Vec<&str> = self
            .scheme
            .node_types
            .iter()
            .map(|&t| self.graph.type_name(t))
            .collect();
        write!(f, "{}", types.join("-"))?;
        if !self.scheme.is_intra() {
            let rels: Vec<&str> = self
                .scheme
                .relationships
                .iter()
                .map(|&r| self.graph.relationship_name(r))
                .collect();
            write!(f, "|{}", rels.join(","))?;
        }
        Ok(())
    }
}

fn data_lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String)>> {
    reader.lines().enumerate().filter_map(|(i, line)| match line {
        Err(e) => Some(Err(Error::Io(e))),
        Ok(line) => {
            let trimmed = line.trim_end_matches(['\r', '\n']);
            if trimmed.trim().is_empty() || trimmed.trim_start().starts_with('#') {
                None
            } else {
                Some(Ok((i + 1, trimmed.to_string())))
            }
        }
    })
}

/// Reads `relationship<TAB>src<TAB>dst` lines.
pub fn read_edge_records<R: BufRead>(reader: R) -> Result<Vec<EdgeRecord>> {
    data_lines(reader)
        .map(|line| {
            let (no, line) = line?;
            let fields: Vec<&str> = line.split('\t').collect();
            match fields.as_slice() {
                [rel, src, dst] if !rel.is_empty() && !src.is_empty() && !dst.is_empty() => {
                    Ok(EdgeRecord::new(*src, *dst, *rel))
                }
                _ => Err(Error::Parse {
                    line: no,
                    message: format!("expected `relationship<TAB>src<TAB>dst`, got {} field(s)", fields.len()),
                }),
            }
        })
        .collect()
}

/// Reads `node<TAB>type` lines.
pub fn read_type_records<R: BufRead>(reader: R) -> Result<Vec<(String, String)>> {
    data_lines(reader)
        .map(|line| {
            let (no, line) = line?;
            let fields: Vec<&str> = line.split('\t').collect();
            match fields.as_slice() {
                [node, ty] if !node.is_empty() && !ty.is_empty() => Ok((node.to_string(), ty.to_string())),
                _ => Err(Error::Parse {
                    line: no,
                    message: format!("expected `node<TAB>type`, got {} field(s)", fields.len()),
                }),
            }
        })
        .collect()
}
