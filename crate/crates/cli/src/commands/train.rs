//! `hetrel train`: fit a model and write it plus a metrics log.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use hetrel::cpgnn::{embed_nodes, save_model, train, GsimModel};
use hetrel::eval::{recall_at_n, top_k_search};
use hetrel::hetgraph::{split_labels, HeteroGraph, LabelTable, Split};

use crate::commands::{load_graph_and_labels, relevance_over};
use crate::config::Settings;
use crate::error::CliError;

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Nodes TSV: node_id<TAB>type<TAB>label (`-` for unlabeled).
    #[arg(long)]
    pub nodes: Option<PathBuf>,
    /// Edges TSV: src_id<TAB>relation<TAB>dst_id.
    #[arg(long)]
    pub edges: Option<PathBuf>,
    /// Flat `key = value` config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Random seed for splitting, initialisation, and dropout.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Where to write the trained model.
    #[arg(long)]
    pub out: PathBuf,
    /// Where to write the metrics log (default: `<out>.log`).
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Treat edge lines as directed (no reverse twins).
    #[arg(long)]
    pub directed: bool,
}

pub fn run(args: TrainArgs) -> Result<i32, CliError> {
    let settings = Settings::from_file(args.config.as_deref())?;
    let (graph, raw_labels) =
        load_graph_and_labels(&settings, args.nodes.as_deref(), args.edges.as_deref(), args.directed)?;
    let cfg = settings.train_config(args.seed)?;
    let labels = split_labels(&raw_labels, &graph, cfg.seed)?;

    let outcome = train(&graph, &labels, &cfg)?;
    save_model(&outcome.model, &args.out)?;

    let mut report = String::new();
    for e in &outcome.log {
        writeln!(
            report,
            "epoch {}\ttotal {:.6}\tsupervised {:.6}\tself {:.6}\tval {:.6}\tattention_dev {:.3e}",
            e.epoch, e.total, e.supervised, e.self_relevance, e.val_supervised, e.attention_deviation
        )
        .expect("writing to a String cannot fail");
    }
    writeln!(report, "best_epoch {}", outcome.best_epoch).unwrap();
    writeln!(report, "epochs_run {}", outcome.epochs_run).unwrap();
    if let Some(recall) = mean_split_recall(&graph, &labels, &outcome.model, Split::Val, 10)? {
        writeln!(report, "val_recall@10 {recall:.6}").unwrap();
    }

    print!("{report}");
    let log_path = args.log.clone().unwrap_or_else(|| {
        let mut os = args.out.as_os_str().to_os_string();
        os.push(".log");
        PathBuf::from(os)
    });
    std::fs::write(&log_path, report.as_bytes())?;
    Ok(0)
}

/// Mean recall@`n` over the labeled queries of one split, searching within
/// each query's own node type. `None` when the split has no queries.
pub(crate) fn mean_split_recall(
    graph: &HeteroGraph,
    labels: &LabelTable,
    model: &GsimModel,
    split: Split,
    n: usize,
) -> Result<Option<f64>, CliError> {
    let queries = labels.nodes_in_split(split);
    if queries.is_empty() {
        return Ok(None);
    }
    let h = embed_nodes(graph, model)?;
    let m = relevance_over(&h, graph.nodes().collect())?;
    let mut sum = 0.0;
    for &q in &queries {
        let results = top_k_search(&m, graph, q, n, Some(graph.node_type(q)), true)?;
        sum += recall_at_n(&results, labels, n)?;
    }
    Ok(Some(sum / queries.len() as f64))
}
