use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use hybridgnn::eval::SplitFractions;
use hybridgnn::sampler::SamplerConfig;
use hybridgnn_cli::commands;
use hybridgnn_cli::config::RunConfig;

/// Relationship-specific embeddings for multiplex heterogeneous networks.
#[derive(Parser)]
#[command(name = "hybridgnn", version)]
struct Cli {
    /// Overrides the seed from the config (or the checkpoint).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse edge and type files into a binary graph.
    Ingest {
        #[arg(long)]
        edges: PathBuf,
        #[arg(long)]
        types: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train with the settings in --config.
    Train {
        /// Overrides paths.output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Score a checkpoint on a re-created edge split.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        graph: PathBuf,
        /// Defaults to --seed, then the checkpoint's seed.
        #[arg(long)]
        split_seed: Option<u64>,
        #[arg(long, default_value_t = 10)]
        k: usize,
        /// Add PR@k/HR@k per training-degree bucket.
        #[arg(long)]
        by_degree: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write relationship-specific embeddings as text.
    ExportEmbeddings {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        relationship: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print metapath-guided (or untyped) random walks.
    SampleWalks {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        relationship: String,
        /// e.g. `U-I-U`; omit for untyped walks.
        #[arg(long)]
        scheme: Option<String>,
        #[arg(long)]
        num_walks: Option<usize>,
        #[arg(long)]
        walk_length: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mean flow-level attention per relationship over a node sample.
    AttentionReport {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 1000)]
        sample_size: usize,
    },
}

fn output(path: Option<PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(&p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn load_config(cli: &Cli) -> anyhow::Result<Option<RunConfig>> {
    let Some(path) = &cli.config else { return Ok(None) };
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.set_seed(seed);
    }
    Ok(Some(cfg))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let cfg = load_config(&cli)?;
    let mut stdout = std::io::stdout().lock();
    match cli.command {
        Command::Ingest { edges, types, out } => {
            commands::ingest(&edges, &types, &out, &mut stdout)?;
        }
        Command::Train { output } => {
            let mut cfg = cfg.context("train needs --config")?;
            if let Some(dir) = output {
                cfg.paths.output = dir;
            }
            let files = commands::train(&cfg, &mut stdout)?;
            writeln!(stdout, "wrote {}", files.checkpoint.display())?;
        }
        Command::Evaluate { checkpoint, graph, split_seed, k, by_degree, out } => {
            let fractions = cfg.as_ref().map_or(SplitFractions::default(), |c| c.eval.fractions);
            let report = commands::evaluate(&checkpoint, &graph, split_seed.or(cli.seed), fractions, k, by_degree)?;
            let mut w = output(out)?;
            writeln!(w, "{}", serde_json::to_string_pretty(&report)?)?;
            w.flush()?;
        }
        Command::ExportEmbeddings { checkpoint, graph, relationship, out } => {
            let mut w = output(out)?;
            commands::export_embeddings(&checkpoint, &graph, &relationship, &mut w)?;
            w.flush()?;
        }
        Command::SampleWalks { graph, relationship, scheme, num_walks, walk_length, out } => {
            let mut sampler = cfg.map_or_else(SamplerConfig::default, |c| c.sampler);
            if let Some(seed) = cli.seed {
                sampler.seed = seed;
            }
            sampler.num_walks = num_walks.unwrap_or(sampler.num_walks);
            sampler.walk_length = walk_length.unwrap_or(sampler.walk_length);
            let mut w = output(out)?;
            commands::sample_walks(&graph, &relationship, scheme.as_deref(), &sampler, &mut w)?;
            w.flush()?;
        }
        Command::AttentionReport { checkpoint, graph, sample_size } => {
            let report = commands::attention_report(&checkpoint, &graph, sample_size, cli.seed)?;
            writeln!(stdout, "{}", serde_json::to_string_pretty(&report)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
