//! The subcommands. Each takes explicit inputs and writes its human-facing
//! output to `out`, so the binary is a thin argument parser.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use hybridgnn::checkpoint::Checkpoint;
use hybridgnn::eval::{self, split_edges, SplitFractions};
use hybridgnn::graph::{load_graph, read_edge_records, read_type_records, MultiplexGraph, NodeId};
use hybridgnn::model::{forward_node, sample_node_flows};
use hybridgnn::rng::{self, Domain};
use hybridgnn::sampler::{relationship_walks, training_walks, SamplerConfig};
use hybridgnn::trainer::{self, TrainSetup};
use hybridgnn::MetapathScheme;
use rand::seq::index::sample;
use serde_json::{json, Map, Value};

use crate::artifact;
use crate::config::RunConfig;

pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const LOG_FILE: &str = "log.jsonl";
pub const REPORT_FILE: &str = "report.json";

fn open(path: &Path) -> anyhow::Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

/// Parses the tab-separated edge and type files.
pub fn read_tsv_graph(edges: &Path, types: &Path) -> anyhow::Result<MultiplexGraph> {
    let edge_records = read_edge_records(open(edges)?).with_context(|| format!("reading {}", edges.display()))?;
    let type_records = read_type_records(open(types)?).with_context(|| format!("reading {}", types.display()))?;
    Ok(load_graph(edge_records, type_records)?)
}

fn write_json(path: &Path, value: &Value) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// `|V| |E| |O| |R|` in one line, plus edges per relationship.
pub fn describe(g: &MultiplexGraph, out: &mut dyn Write) -> anyhow::Result<()> {
    writeln!(
        out,
        "|V|={} |E|={} |O|={} |R|={}",
        g.num_nodes(),
        g.total_edges(),
        g.num_types(),
        g.num_relationships()
    )?;
    for r in g.relationships() {
        writeln!(out, "  {}: {} edges", g.relationship_name(r), g.num_edges(r))?;
    }
    Ok(())
}

pub fn ingest(edges: &Path, types: &Path, dest: &Path, out: &mut dyn Write) -> anyhow::Result<MultiplexGraph> {
    let g = read_tsv_graph(edges, types)?;
    artifact::save(&g, dest)?;
    describe(&g, out)?;
    Ok(g)
}

fn config_graph(cfg: &RunConfig) -> anyhow::Result<MultiplexGraph> {
    match (&cfg.paths.graph, &cfg.paths.edges, &cfg.paths.types) {
        (Some(graph), _, _) => artifact::load(graph),
        (None, Some(edges), Some(types)) => read_tsv_graph(edges, types),
        _ => bail!("config needs paths.graph or both paths.edges and paths.types"),
    }
}

/// Files written by [`train`].
#[derive(Clone, Debug)]
pub struct TrainArtifacts {
    pub checkpoint: PathBuf,
    pub log: PathBuf,
    pub report: PathBuf,
    pub best_epoch: usize,
}

/// Splits the graph, trains with early stopping on validation ROC-AUC, and
/// writes the best checkpoint, the epoch log and the test report.
pub fn train(cfg: &RunConfig, out: &mut dyn Write) -> anyhow::Result<TrainArtifacts> {
    cfg.validate()?;
    let g = config_graph(cfg)?;
    let registry = cfg.registry(&g)?;
    let split = split_edges(&g, cfg.eval.fractions, cfg.seed)?;
    let setup = TrainSetup {
        graph: &split.train_graph,
        registry,
        model: cfg.model.clone(),
        sampler: cfg.sampler.clone(),
        train: cfg.train.clone(),
    };
    let outcome = trainer::train(&setup, &split)?;

    let dir = &cfg.paths.output;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let checkpoint = dir.join(CHECKPOINT_FILE);
    Checkpoint::new(outcome.params.clone(), &g, cfg.sampler.clone(), cfg.seed)?.save(&checkpoint)?;
    let log = dir.join(LOG_FILE);
    let mut w = BufWriter::new(File::create(&log)?);
    for record in &outcome.log {
        serde_json::to_writer(&mut w, record)?;
        writeln!(w)?;
    }
    w.flush()?;
    let report = eval::evaluate(&outcome.params, &split, &cfg.sampler, cfg.seed, cfg.eval.k, false)?;
    let report_path = dir.join(REPORT_FILE);
    write_json(&report_path, &report.to_json())?;
    writeln!(
        out,
        "trained {} epochs, best epoch {}, test macro ROC-AUC {:.4}",
        outcome.log.len(),
        outcome.best_epoch,
        report.macro_average.roc_auc
    )?;
    Ok(TrainArtifacts {
        checkpoint,
        log,
        report: report_path,
        best_epoch: outcome.best_epoch,
    })
}

fn load_checked(checkpoint: &Path, graph: &Path) -> anyhow::Result<(Checkpoint, MultiplexGraph)> {
    let ckpt = Checkpoint::load(checkpoint).with_context(|| format!("loading {}", checkpoint.display()))?;
    let g = artifact::load(graph)?;
    ckpt.check_graph(&g)?;
    Ok((ckpt, g))
}

/// Re-creates the split for `split_seed` and scores the checkpoint on it.
pub fn evaluate(
    checkpoint: &Path,
    graph: &Path,
    split_seed: Option<u64>,
    fractions: SplitFractions,
    k: usize,
    by_degree: bool,
) -> anyhow::Result<Value> {
    let (ckpt, g) = load_checked(checkpoint, graph)?;
    let seed = ckpt.header.seed;
    let split = split_edges(&g, fractions, split_seed.unwrap_or(seed))?;
    let report = eval::evaluate(&ckpt.params, &split, &ckpt.header.sampler, seed, k, by_degree)?;
    Ok(report.to_json())
}

/// Formats with six significant digits.
pub fn sig6(x: f64) -> String {
    format!("{x:.5e}")
}

/// Writes `|V| d`, then one `label v1 .. vd` line per node with the
/// relationship-specific embeddings computed on `graph`.
pub fn export_embeddings(checkpoint: &Path, graph: &Path, relationship: &str, dest: &mut dyn Write) -> anyhow::Result<()> {
    let (ckpt, g) = load_checked(checkpoint, graph)?;
    let r = g
        .relationship_id(relationship)
        .ok_or_else(|| hybridgnn::Error::UnknownRelationship(relationship.to_string()))?;
    let emb = eval::embed_all(&ckpt.params, &g, &ckpt.header.sampler, ckpt.header.seed)?;
    let d = ckpt.params.dims().d;
    writeln!(dest, "{} {}", g.num_nodes(), d)?;
    for v in g.nodes() {
        let values: Vec<String> = emb.get(v, r).iter().map(|&x| sig6(x)).collect();
        writeln!(dest, "{} {}", g.node_label(v), values.join(" "))?;
    }
    Ok(())
}

/// Parses an exported embedding file back into `(label, vector)` rows.
pub fn read_embeddings(reader: impl BufRead) -> anyhow::Result<Vec<(String, Vec<f64>)>> {
    let mut lines = reader.lines();
    let header = lines.next().context("empty embedding file")??;
    let (n, d) = header.split_once(' ').context("malformed header")?;
    let (n, d): (usize, usize) = (n.parse()?, d.parse()?);
    let mut rows = Vec::with_capacity(n);
    for line in lines {
        let line = line?;
        let mut parts = line.split(' ');
        let label = parts.next().context("missing label")?.to_string();
        let values = parts.map(|p| p.parse::<f64>()).collect::<Result<Vec<_>, _>>()?;
        if values.len() != d {
            bail!("node {label}: expected {d} values, found {}", values.len());
        }
        rows.push((label, values));
    }
    if rows.len() != n {
        bail!("expected {n} rows, found {}", rows.len());
    }
    Ok(rows)
}

/// Writes walks as space-separated labels, one per line. With a scheme the
/// walks follow it; otherwise they are untyped.
pub fn sample_walks(graph: &Path, relationship: &str, scheme: Option<&str>, cfg: &SamplerConfig, dest: &mut dyn Write) -> anyhow::Result<usize> {
    let g = artifact::load(graph)?;
    let r = g
        .relationship_id(relationship)
        .ok_or_else(|| hybridgnn::Error::UnknownRelationship(relationship.to_string()))?;
    let walks = match scheme {
        Some(text) => {
            let s = MetapathScheme::parse(&g, text, r)?;
            g.validate_scheme(&s)?;
            training_walks(&g, r, &s, cfg)?
        }
        None => relationship_walks(&g, r, cfg),
    };
    for w in &walks {
        let labels: Vec<&str> = w.nodes.iter().map(|&n| g.node_label(n)).collect();
        writeln!(dest, "{}", labels.join(" "))?;
    }
    Ok(walks.len())
}

/// Mean flow-level attention mass per flow, for a seeded node sample,
/// grouped by relationship and by node type (node types see different
/// flow sets). Every group sums to one.
pub fn attention_report(checkpoint: &Path, graph: &Path, sample_size: usize, seed: Option<u64>) -> anyhow::Result<Value> {
    let (ckpt, g) = load_checked(checkpoint, graph)?;
    let params = &ckpt.params;
    let seed = seed.unwrap_or(ckpt.header.seed);
    let take = sample_size.min(g.num_nodes());
    let mut rng = rng::stream(seed, Domain::Report, 0, 0, 0);
    let mut nodes: Vec<NodeId> = sample(&mut rng, g.num_nodes(), take).into_iter().map(|i| NodeId(i as u32)).collect();
    nodes.sort();

    // (relationship, type) -> (flow names, summed mass, node count)
    type Group = (Vec<String>, Vec<f64>, usize);
    let mut groups: BTreeMap<(usize, usize), Group> = BTreeMap::new();
    for &v in &nodes {
        let mut flow_rng = rng::stream(ckpt.header.seed, Domain::EvalFlows, v.0 as u64, 0, 0);
        let flows = sample_node_flows(&g, &params.registry, &ckpt.header.sampler, &params.config.ablation, v, &mut flow_rng)?;
        let fwd = forward_node(params, &g, &flows)?;
        let t = g.node_type(v);
        for r in g.relationships() {
            let mass = fwd.flow_attention_mass(r);
            if mass.is_empty() {
                continue;
            }
            let entry = groups.entry((r.index(), t.index())).or_insert_with(|| {
                let mut names: Vec<String> = flows.per_relationship[r.index()]
                    .iter()
                    .map(|l| match l.tag {
                        hybridgnn::sampler::FlowTag::Scheme(s) => params.registry.scheme(s).display(&g).to_string(),
                        hybridgnn::sampler::FlowTag::Random => "RANDOM".to_string(),
                    })
                    .collect();
                names.shrink_to_fit();
                (names, vec![0.0; mass.len()], 0)
            });
            for (acc, m) in entry.1.iter_mut().zip(&mass) {
                *acc += m;
            }
            entry.2 += 1;
        }
    }
    let mut rels = Map::new();
    for ((r, t), (names, sums, count)) in groups {
        let rel = rels
            .entry(g.relationship_names()[r].clone())
            .or_insert_with(|| Value::Object(Map::new()));
        let weights: Map<String, Value> = names
            .into_iter()
            .zip(sums)
            .map(|(n, s)| (n, json!(s / count as f64)))
            .collect();
        rel.as_object_mut()
            .unwrap()
            .insert(g.type_names()[t].clone(), json!({ "nodes": count, "weights": weights }));
    }
    Ok(json!({ "sample_size": take, "seed": seed, "relationships": rels }))
}
