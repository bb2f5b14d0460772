//! `hetrel search`: rank the nodes most relevant to a query node.

use std::path::PathBuf;

use clap::Args;
use hetrel::cpgnn::{embed_nodes, load_model};
use hetrel::eval::{recall_at_n, top_k_search};

use crate::commands::{load_graph_and_labels, relevance_over};
use crate::config::Settings;
use crate::error::CliError;

#[derive(Args, Debug)]
pub struct SearchArgs {
    /// Nodes TSV.
    #[arg(long)]
    pub nodes: Option<PathBuf>,
    /// Edges TSV.
    #[arg(long)]
    pub edges: Option<PathBuf>,
    /// Flat `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Trained model file.
    #[arg(long)]
    pub model: PathBuf,
    /// Query node id.
    #[arg(long)]
    pub query: String,
    /// How many results to return.
    #[arg(long)]
    pub top: Option<usize>,
    /// Restrict results to one node type.
    #[arg(long = "type")]
    pub type_filter: Option<String>,
    /// Leave the query node itself out of the ranking.
    #[arg(long)]
    pub exclude_self: bool,
    /// Treat edge lines as directed (no reverse twins).
    #[arg(long)]
    pub directed: bool,
}

pub fn run(args: SearchArgs) -> Result<i32, CliError> {
    let settings = Settings::from_file(args.config.as_deref())?;
    let (graph, labels) =
        load_graph_and_labels(&settings, args.nodes.as_deref(), args.edges.as_deref(), args.directed)?;
    let model = load_model(&args.model)?;
    let top = settings.top(args.top)?;
    if top == 0 {
        return Err(CliError::usage("`--top` must be at least 1"));
    }
    let query = graph
        .node_id(&args.query)
        .ok_or_else(|| CliError::data(format!("unknown query id '{}'", args.query)))?;
    let type_filter = match &args.type_filter {
        None => None,
        Some(name) => Some(graph.type_id(name).ok_or_else(|| {
            CliError::data(format!("unknown node type '{name}'"))
        })?),
    };

    let h = embed_nodes(&graph, &model)?;
    let m = relevance_over(&h, graph.nodes().collect())?;
    let results = top_k_search(&m, &graph, query, top, type_filter, !args.exclude_self)?;
    if results.short {
        eprintln!(
            "note: only {} candidate(s) matched; asked for {top}",
            results.hits.len()
        );
    }

    let mut table = String::new();
    for (rank, hit) in results.hits.iter().enumerate() {
        let label = labels
            .label_of(hit.node)
            .map(|l| labels.label_name(l).to_string())
            .unwrap_or_else(|| "-".to_string());
        table.push_str(&format!(
            "{}\t{}\t{:.6}\t{label}\n",
            rank + 1,
            graph.node_name(hit.node),
            hit.score
        ));
    }
    if labels.label_of(query).is_some() {
        let recall = recall_at_n(&results, &labels, top)?;
        table.push_str(&format!("# recall@{top} {recall:.6}\n"));
    }
    print!("{table}");
    Ok(0)
}
