//! Binary checkpoints: an 8-byte magic, a little-endian `u32` version, a
//! `u64` header length, a JSON header, then every tensor as little-endian
//! `f32` in canonical order.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::MultiplexGraph;
use crate::linalg::Matrix;
use crate::model::{ModelConfig, ModelParams, SchemeRegistry, Tensors};
use crate::sampler::SamplerConfig;

pub const MAGIC: &[u8; 8] = b"HGNNCKPT";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub model: ModelConfig,
    pub sampler: SamplerConfig,
    pub seed: u64,
    pub num_nodes: usize,
    pub type_names: Vec<String>,
    pub relationship_names: Vec<String>,
    pub registry: SchemeRegistry,
    pub tensors: Vec<(String, (usize, usize))>,
}

/// A loaded checkpoint. Parameters are exact `f32` values widened to `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub header: Header,
    pub params: ModelParams,
}

impl Checkpoint {
    pub fn new(params: ModelParams, g: &MultiplexGraph, sampler: SamplerConfig, seed: u64) -> Result<Self> {
        params.check_graph(g)?;
        let header = Header {
            model: params.config.clone(),
            sampler,
            seed,
            num_nodes: params.num_nodes(),
            type_names: g.type_names().to_vec(),
            relationship_names: g.relationship_names().to_vec(),
            registry: params.registry.clone(),
            tensors: params.tensors.names_and_shapes(),
        };
        Ok(Checkpoint { header, params })
    }

    /// Fails with `SchemaMismatch` unless `g` has the node count, type names
    /// and relationship names the checkpoint was trained on.
    pub fn check_graph(&self, g: &MultiplexGraph) -> Result<()> {
        let h = &self.header;
        if h.num_nodes != g.num_nodes() || h.type_names != g.type_names() || h.relationship_names != g.relationship_names() {
            return Err(Error::SchemaMismatch(format!(
                "checkpoint expects {} nodes, types {:?}, relationships {:?}; graph has {} nodes, types {:?}, relationships {:?}",
                h.num_nodes,
                h.type_names,
                h.relationship_names,
                g.num_nodes(),
                g.type_names(),
                g.relationship_names()
            )));
        }
        Ok(())
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        let header = serde_json::to_vec(&self.header).map_err(|e| Error::Checkpoint(e.to_string()))?;
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(header.len() as u64).to_le_bytes())?;
        w.write_all(&header)?;
        let mut buf = Vec::with_capacity(self.params.tensors.num_scalars() * 4);
        for m in self.params.tensors.list() {
            for &x in m.as_slice() {
                buf.extend_from_slice(&(x as f32).to_le_bytes());
            }
        }
        w.write_all(&buf)?;
        w.flush()?;
        Ok(())
    }

    pub fn read<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Checkpoint("not a checkpoint file".into()));
        }
        let mut word = [0u8; 4];
        r.read_exact(&mut word)?;
        let version = u32::from_le_bytes(word);
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported checkpoint version {version}")));
        }
        let mut len = [0u8; 8];
        r.read_exact(&mut len)?;
        let mut header = vec![0u8; u64::from_le_bytes(len) as usize];
        r.read_exact(&mut header)?;
        let header: Header = serde_json::from_slice(&header).map_err(|e| Error::Checkpoint(e.to_string()))?;

        let dims = header.model.dims;
        let mut tensors = Tensors::zeros(
            header.num_nodes,
            header.type_names.len(),
            header.relationship_names.len(),
            header.registry.num_agg_sets(),
            dims,
        );
        if tensors.names_and_shapes() != header.tensors {
            return Err(Error::Checkpoint("tensor layout does not match the header".into()));
        }
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() != tensors.num_scalars() * 4 {
            return Err(Error::Checkpoint(format!(
                "expected {} tensor bytes, found {}",
                tensors.num_scalars() * 4,
                bytes.len()
            )));
        }
        let mut values = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64);
        for m in tensors.list_mut() {
            fill(m, &mut values);
        }
        let params = ModelParams {
            config: header.model.clone(),
            registry: header.registry.clone(),
            num_types: header.type_names.len(),
            tensors,
        };
        Ok(Checkpoint { header, params })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write(std::io::BufWriter::new(file))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read(std::io::BufReader::new(file))
    }
}

fn fill(m: &mut Matrix, values: &mut impl Iterator<Item = f64>) {
    for x in m.as_mut_slice() {
        *x = values.next().expect("length checked");
    }
}
