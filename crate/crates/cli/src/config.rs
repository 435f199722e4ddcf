//! Run configuration, read from TOML.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use hybridgnn::eval::SplitFractions;
use hybridgnn::model::{ModelConfig, SchemeRegistry};
use hybridgnn::sampler::SamplerConfig;
use hybridgnn::trainer::TrainConfig;
use hybridgnn::{MetapathScheme, MultiplexGraph};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    /// Binary graph written by `ingest`. Takes precedence over `edges`/`types`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub types: Option<PathBuf>,
    pub output: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub fractions: SplitFractions,
    /// Cut-off for PR@k and HR@k.
    pub k: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            fractions: SplitFractions::default(),
            k: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; copied into the sampler and trainer sections.
    #[serde(default)]
    pub seed: u64,
    pub paths: Paths,
    /// Relationship name to scheme strings such as `U-I-U` or
    /// `V-U-A|like,comment`.
    #[serde(default)]
    pub schemes: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub eval: EvalConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).context("parsing configuration")?;
        cfg.set_seed(cfg.seed);
        Ok(cfg)
    }

    /// Reads a config file; relative paths are resolved against its directory.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.paths.output);
        for p in [&mut cfg.paths.graph, &mut cfg.paths.edges, &mut cfg.paths.types].into_iter().flatten() {
            resolve(p);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.sampler.seed = seed;
        self.train.seed = seed;
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.model.dims.validate()?;
        self.sampler.validate()?;
        self.train.validate()?;
        self.eval.fractions.validate()?;
        if self.eval.k == 0 {
            bail!("eval.k must be positive");
        }
        Ok(())
    }

    /// Resolves scheme strings against `g` and validates them.
    pub fn registry(&self, g: &MultiplexGraph) -> anyhow::Result<SchemeRegistry> {
        let mut per = vec![Vec::new(); g.num_relationships()];
        for (name, texts) in &self.schemes {
            let r = g
                .relationship_id(name)
                .ok_or_else(|| hybridgnn::Error::UnknownRelationship(name.clone()))?;
            for text in texts {
                let scheme = MetapathScheme::parse(g, text, r).with_context(|| format!("scheme `{text}`"))?;
                g.validate_scheme(&scheme).with_context(|| format!("scheme `{text}` under `{name}`"))?;
                per[r.index()].push(scheme);
            }
        }
        Ok(SchemeRegistry::new(g, per)?)
    }
}
