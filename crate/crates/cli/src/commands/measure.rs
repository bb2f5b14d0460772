//! `hetrel measure`: score node pairs with a chosen relevance measure.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use hetrel::eval::{export_relevance_matrix, RelevanceMatrix};
use hetrel::hetgraph::{HeteroGraph, MetaPath, NodeId};
use hetrel::measures::{hetesim, prw, rw_visit_prob, simrank};
use hetrel::tensor::Matrix;

use crate::commands::{load_graph_and_labels, relevance_over};
use crate::config::Settings;
use crate::error::CliError;

#[derive(Args, Debug)]
pub struct MeasureArgs {
    /// Nodes TSV.
    #[arg(long)]
    pub nodes: Option<PathBuf>,
    /// Edges TSV.
    #[arg(long)]
    pub edges: Option<PathBuf>,
    /// Flat `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Which relevance measure to compute.
    #[arg(long, value_enum)]
    pub method: Method,
    /// Meta-path like `A-writes-P-writes^-1-A` (hetesim only).
    #[arg(long)]
    pub metapath: Option<String>,
    /// Node pairs `src,dst`; repeat the flag or separate pairs with `;`.
    /// Without it, the full score matrix is written as CSV to `--out`.
    #[arg(long)]
    pub pairs: Vec<String>,
    /// Even total walk length for `prw` (both walks combined).
    #[arg(long)]
    pub k: Option<usize>,
    /// Trained model file (gsim only).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Output file; pair scores go to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Treat edge lines as directed (no reverse twins).
    #[arg(long)]
    pub directed: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Simrank,
    Hetesim,
    Prw,
    Gsim,
}

pub fn run(args: MeasureArgs) -> Result<i32, CliError> {
    let settings = Settings::from_file(args.config.as_deref())?;
    let (graph, _labels) =
        load_graph_and_labels(&settings, args.nodes.as_deref(), args.edges.as_deref(), args.directed)?;

    let pairs = parse_pairs(&graph, &args.pairs)?;
    if pairs.is_empty() {
        let Some(out) = &args.out else {
            return Err(CliError::usage(
                "full-matrix output needs `--out FILE`; pass `--pairs src,dst` for single scores",
            ));
        };
        let matrix = full_matrix(&graph, &args, &settings)?;
        export_relevance_matrix(&matrix, &graph, out)?;
        return Ok(0);
    }

    let score = scorer(&graph, &args, &settings)?;
    let mut table = String::new();
    for &(src, dst) in &pairs {
        let value = score(src, dst)?;
        table.push_str(&format!(
            "{}\t{}\t{value:.6}\n",
            graph.node_name(src),
            graph.node_name(dst)
        ));
    }
    match &args.out {
        Some(path) => std::fs::File::create(path)?.write_all(table.as_bytes())?,
        None => print!("{table}"),
    }
    Ok(0)
}

/// Resolves `src,dst` pair strings to node ids.
fn parse_pairs(graph: &HeteroGraph, raw: &[String]) -> Result<Vec<(NodeId, NodeId)>, CliError> {
    let mut pairs = Vec::new();
    for chunk in raw.iter().flat_map(|r| r.split(';')) {
        let chunk = chunk.trim();
        if chunk.is_empty() {
            continue;
        }
        let Some((src, dst)) = chunk.split_once(',') else {
            return Err(CliError::usage(format!(
                "pair `{chunk}` is not of the form `src,dst`"
            )));
        };
        let resolve = |name: &str| {
            graph
                .node_id(name.trim())
                .ok_or_else(|| CliError::data(format!("unknown node id '{}'", name.trim())))
        };
        pairs.push((resolve(src)?, resolve(dst)?));
    }
    Ok(pairs)
}

type Scorer<'a> = Box<dyn Fn(NodeId, NodeId) -> Result<f64, CliError> + 'a>;

/// A per-pair scoring closure for the chosen method.
fn scorer<'a>(
    graph: &'a HeteroGraph,
    args: &'a MeasureArgs,
    settings: &Settings,
) -> Result<Scorer<'a>, CliError> {
    match args.method {
        Method::Simrank => {
            let scores = simrank(graph, settings.decay()?, settings.iterations()?)?;
            Ok(Box::new(move |a, b| Ok(scores.get(a.0, b.0))))
        }
        Method::Hetesim => {
            let path = hetesim_path(graph, args)?;
            let normalized = settings.normalized()?;
            Ok(Box::new(move |a, b| Ok(hetesim(graph, a, b, &path, normalized)?)))
        }
        Method::Prw => {
            let two_k = settings.walk_length(args.k)?;
            Ok(Box::new(move |a, b| Ok(prw(graph, a, b, two_k)?)))
        }
        Method::Gsim => {
            let h = load_embeddings(graph, args)?;
            Ok(Box::new(move |a, b| Ok(hetrel::cpgnn::relevance(&h, a.0, b.0)?)))
        }
    }
}

/// The full score matrix for the chosen method.
fn full_matrix(
    graph: &HeteroGraph,
    args: &MeasureArgs,
    settings: &Settings,
) -> Result<RelevanceMatrix, CliError> {
    let everything: Vec<NodeId> = graph.nodes().collect();
    match args.method {
        Method::Simrank => {
            let scores = simrank(graph, settings.decay()?, settings.iterations()?)?;
            Ok(RelevanceMatrix::new(everything, scores)?)
        }
        Method::Prw => {
            let two_k = settings.walk_length(args.k)?;
            if two_k % 2 != 0 {
                // Surface the parameter problem before doing n walks.
                prw(graph, NodeId(0), NodeId(0), two_k)?;
            }
            let distributions: Vec<_> = everything
                .iter()
                .map(|&v| rw_visit_prob(graph, v, two_k / 2))
                .collect::<Result<_, _>>()?;
            let n = everything.len();
            let mut scores = Matrix::zeros(n, n);
            for a in 0..n {
                for b in a..n {
                    let meet: f64 = distributions[a]
                        .as_slice()
                        .iter()
                        .zip(distributions[b].as_slice())
                        .map(|(x, y)| x * y)
                        .sum();
                    scores.set(a, b, meet);
                    scores.set(b, a, meet);
                }
            }
            Ok(RelevanceMatrix::new(everything, scores)?)
        }
        Method::Hetesim => {
            let path = hetesim_path(graph, args)?;
            if path.source_type() != path.target_type() {
                return Err(CliError::data(format!(
                    "matrix output needs a meta-path that starts and ends on the same type; \
                     this one runs {} -> {}",
                    graph.type_name(path.source_type()),
                    graph.type_name(path.target_type())
                )));
            }
            let normalized = settings.normalized()?;
            let pool = graph.nodes_of_type(path.source_type()).to_vec();
            let n = pool.len();
            let mut scores = Matrix::zeros(n, n);
            for a in 0..n {
                for b in 0..n {
                    scores.set(a, b, hetesim(graph, pool[a], pool[b], &path, normalized)?);
                }
            }
            Ok(RelevanceMatrix::new(pool, scores)?)
        }
        Method::Gsim => {
            let h = load_embeddings(graph, args)?;
            relevance_over(&h, everything)
        }
    }
}

fn hetesim_path(graph: &HeteroGraph, args: &MeasureArgs) -> Result<MetaPath, CliError> {
    let Some(text) = &args.metapath else {
        return Err(CliError::usage("`--metapath` is required for hetesim"));
    };
    Ok(MetaPath::parse(graph, text)?)
}

fn load_embeddings(graph: &HeteroGraph, args: &MeasureArgs) -> Result<Matrix, CliError> {
    let Some(path) = &args.model else {
        return Err(CliError::usage("`--model` is required for gsim"));
    };
    let model = hetrel::cpgnn::load_model(path)?;
    Ok(hetrel::cpgnn::embed_nodes(graph, &model)?)
}
