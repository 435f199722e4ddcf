//! Binary graph artifact: labels, types and per-relationship edge lists in
//! dense-id order, so re-ingesting the same files gives identical bytes.
//!
//! Layout (little endian): magic, `u32` version, the type names, the
//! relationship names, `u32` node count followed by `(label, u16 type)` per
//! node, then per relationship a `u64` edge count and `(u32, u32)` pairs.
//! Strings are a `u32` byte length followed by UTF-8.

use std::io::{Read, Write};
use std::path::Path;

use anyhow::{bail, ensure, Context};
use hybridgnn::graph::{MultiplexGraph, NodeId, RelationshipId, TypeId};

pub const MAGIC: &[u8; 8] = b"HGNNGRPH";
pub const VERSION: u32 = 1;

fn put_u32(out: &mut Vec<u8>, x: u32) {
    out.extend_from_slice(&x.to_le_bytes());
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    put_u32(out, s.len() as u32);
    out.extend_from_slice(s.as_bytes());
}

pub fn encode(g: &MultiplexGraph) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, VERSION);
    for names in [g.type_names(), g.relationship_names()] {
        put_u32(&mut out, names.len() as u32);
        for n in names {
            put_str(&mut out, n);
        }
    }
    put_u32(&mut out, g.num_nodes() as u32);
    for v in g.nodes() {
        put_str(&mut out, g.node_label(v));
        out.extend_from_slice(&g.node_type(v).0.to_le_bytes());
    }
    for r in g.relationships() {
        out.extend_from_slice(&(g.num_edges(r) as u64).to_le_bytes());
        for (a, b) in g.edges(r) {
            put_u32(&mut out, a.0);
            put_u32(&mut out, b.0);
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> anyhow::Result<&[u8]> {
        ensure!(self.bytes.len() >= n, "graph artifact is truncated");
        let (head, tail) = self.bytes.split_at(n);
        self.bytes = tail;
        Ok(head)
    }

    fn u16(&mut self) -> anyhow::Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into()?))
    }

    fn u32(&mut self) -> anyhow::Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into()?))
    }

    fn u64(&mut self) -> anyhow::Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into()?))
    }

    fn string(&mut self) -> anyhow::Result<String> {
        let n = self.u32()? as usize;
        Ok(String::from_utf8(self.take(n)?.to_vec())?)
    }

    fn strings(&mut self) -> anyhow::Result<Vec<String>> {
        let n = self.u32()?;
        (0..n).map(|_| self.string()).collect()
    }
}

pub fn decode(bytes: &[u8]) -> anyhow::Result<MultiplexGraph> {
    let mut c = Cursor { bytes };
    if c.take(8).ok() != Some(MAGIC.as_slice()) {
        bail!("not a graph artifact");
    }
    let version = c.u32()?;
    ensure!(version == VERSION, "unsupported graph artifact version {version}");
    let type_names = c.strings()?;
    let relationship_names = c.strings()?;
    let n = c.u32()? as usize;
    let mut labels = Vec::with_capacity(n);
    let mut types = Vec::with_capacity(n);
    for _ in 0..n {
        labels.push(c.string()?);
        let t = c.u16()?;
        ensure!((t as usize) < type_names.len(), "node type id {t} out of range");
        types.push(TypeId(t));
    }
    ensure!(labels.windows(2).all(|w| w[0] < w[1]), "node labels are not in canonical order");
    let mut edges = Vec::new();
    for r in 0..relationship_names.len() {
        let m = c.u64()?;
        for _ in 0..m {
            let (a, b) = (c.u32()?, c.u32()?);
            ensure!((a as usize) < n && (b as usize) < n, "edge endpoint out of range");
            edges.push((RelationshipId(r as u16), NodeId(a), NodeId(b)));
        }
    }
    ensure!(c.bytes.is_empty(), "trailing bytes after graph artifact");
    Ok(MultiplexGraph::from_id_edges(labels, types, type_names, relationship_names, &edges))
}

pub fn save(g: &MultiplexGraph, path: &Path) -> anyhow::Result<()> {
    let mut f = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    f.write_all(&encode(g))?;
    Ok(())
}

pub fn load(path: &Path) -> anyhow::Result<MultiplexGraph> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .with_context(|| format!("opening {}", path.display()))?
        .read_to_end(&mut bytes)?;
    decode(&bytes).with_context(|| format!("reading {}", path.display()))
}
