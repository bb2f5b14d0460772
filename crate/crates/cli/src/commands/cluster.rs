//! `hetrel cluster`: spectral community detection over relevance scores.

use std::path::PathBuf;

use clap::Args;
use hetrel::cpgnn::{embed_nodes, load_model};
use hetrel::eval::{clustering_metrics, import_relevance_matrix, spectral_clustering};
use hetrel::hetgraph::{split_labels, HeteroGraph, LabelTable, NodeId, Split};

use crate::commands::{load_graph_and_labels, relevance_over};
use crate::config::Settings;
use crate::error::CliError;

#[derive(Args, Debug)]
pub struct ClusterArgs {
    /// Nodes TSV.
    #[arg(long)]
    pub nodes: Option<PathBuf>,
    /// Edges TSV.
    #[arg(long)]
    pub edges: Option<PathBuf>,
    /// Flat `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Trained model file; scores come from embedding inner products.
    #[arg(long, conflicts_with = "matrix")]
    pub model: Option<PathBuf>,
    /// Previously exported relevance matrix CSV to cluster as-is.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// Number of communities.
    #[arg(long)]
    pub k: usize,
    /// Seed for the label split and k-means restarts.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Score the partition against the node labels.
    #[arg(long)]
    pub metrics: bool,
    /// Cluster every node instead of the held-out test split.
    #[arg(long)]
    pub all_nodes: bool,
    /// Treat edge lines as directed (no reverse twins).
    #[arg(long)]
    pub directed: bool,
}

pub fn run(args: ClusterArgs) -> Result<i32, CliError> {
    let settings = Settings::from_file(args.config.as_deref())?;
    let (graph, labels) =
        load_graph_and_labels(&settings, args.nodes.as_deref(), args.edges.as_deref(), args.directed)?;
    if args.k < 2 {
        return Err(CliError::usage("`--k` must be at least 2"));
    }
    let seed = settings.seed(args.seed)?;

    let scores = match (&args.model, &args.matrix) {
        (Some(model_path), None) => {
            let model = load_model(model_path)?;
            let h = embed_nodes(&graph, &model)?;
            let pool = node_pool(&graph, &labels, seed, args.all_nodes);
            relevance_over(&h, pool)?
        }
        (None, Some(matrix_path)) => import_relevance_matrix(&graph, matrix_path)?,
        _ => {
            return Err(CliError::usage(
                "exactly one of `--model` or `--matrix` must be given",
            ));
        }
    };

    let outcome = spectral_clustering(&scores, args.k, seed)?;
    for warning in &outcome.warnings {
        eprintln!("warning: {warning}");
    }

    let mut out = String::new();
    let partition = &outcome.partition;
    for (node, cluster) in partition.node_index().iter().zip(partition.assignment()) {
        out.push_str(&format!("{}\t{cluster}\n", graph.node_name(*node)));
    }
    if args.metrics {
        let any_labeled =
            partition.node_index().iter().any(|&v| labels.label_of(v).is_some());
        if any_labeled {
            let m = clustering_metrics(partition, &labels)?;
            out.push_str(&format!("# F {:.6}\n", m.f_score));
            out.push_str(&format!("# NMI {:.6}\n", m.nmi));
            out.push_str(&format!("# ARI {:.6}\n", m.ari));
            out.push_str(&format!("# Purity {:.6}\n", m.purity));
        } else {
            eprintln!("warning: no clustered node carries a label; skipping metrics");
        }
    }
    print!("{out}");
    Ok(0)
}

/// Which nodes to cluster when scoring from a model: the labeled test
/// split by default (re-derived with the same seed as training so the
/// held-out set matches), or everything with `--all-nodes`. Falls back to
/// all nodes when no labels are available to split.
fn node_pool(graph: &HeteroGraph, labels: &LabelTable, seed: u64, all_nodes: bool) -> Vec<NodeId> {
    if all_nodes {
        return graph.nodes().collect();
    }
    match split_labels(labels, graph, seed) {
        Ok(split) => split.nodes_in_split(Split::Test),
        Err(_) => {
            eprintln!("note: labels cannot be split; clustering every node");
            graph.nodes().collect()
        }
    }
}
