//! Tab-separated graph files.
//!
//! Nodes file: `node_id<TAB>type<TAB>label` with `-` for unlabeled nodes.
//! Edges file: `src_id<TAB>relation<TAB>dst_id`. Lines starting with `#`
//! are comments; blank lines are ignored. Errors carry 1-based line numbers.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::graph::{GraphBuilder, GraphError, HeteroGraph, Provenance};
use super::labels::LabelTable;

const NO_LABEL: &str = "-";

fn io_err(path: &Path, source: std::io::Error) -> GraphError {
    GraphError::Io { path: path.display().to_string(), source }
}

/// Parses a TSV file line by line, handing `(line_number, fields)` for every
/// non-comment, non-blank line to `handle`. Lines must have exactly 3 fields.
fn for_each_row(
    path: &Path,
    expected: &'static str,
    mut handle: impl FnMut(usize, [&str; 3]) -> Result<(), GraphError>,
) -> Result<(), GraphError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        let line = line.trim_end_matches('\r');
        let number = idx + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        let (Some(a), Some(b), Some(c), None) =
            (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            return Err(GraphError::MalformedLine {
                path: path.display().to_string(),
                line: number,
                expected,
            });
        };
        if a.is_empty() || b.is_empty() || c.is_empty() {
            return Err(GraphError::MalformedLine {
                path: path.display().to_string(),
                line: number,
                expected,
            });
        }
        handle(number, [a, b, c])?;
    }
    Ok(())
}

/// Loads a graph and its label table from the two TSV files.
///
/// With `undirected` set, each edge line is stored as a directed pair (the
/// reverse direction under the synthesised `<relation>^-1`). The loaded
/// graph must be heterogeneous: node types plus relations > 2.
pub fn load_dataset(
    nodes_path: impl AsRef<Path>,
    edges_path: impl AsRef<Path>,
    undirected: bool,
) -> Result<(HeteroGraph, LabelTable), GraphError> {
    let nodes_path = nodes_path.as_ref();
    let edges_path = edges_path.as_ref();
    let nodes_display = nodes_path.display().to_string();
    let edges_display = edges_path.display().to_string();
    let mut builder: GraphBuilder = HeteroGraph::builder(undirected);
    let mut pending_labels: Vec<(super::graph::NodeId, String)> = Vec::new();

    for_each_row(nodes_path, "node_id<TAB>type<TAB>label", |line, [id, ty, label]| {
        let node = builder.add_node_at(id, ty, Provenance { path: &nodes_display, line })?;
        if label != NO_LABEL {
            pending_labels.push((node, label.to_string()));
        }
        Ok(())
    })?;

    for_each_row(edges_path, "src_id<TAB>relation<TAB>dst_id", |line, [src, rel, dst]| {
        builder.add_edge_at(src, rel, dst, Provenance { path: &edges_display, line })
    })?;

    let graph = builder.finish();
    graph.check_heterogeneous()?;
    let mut labels = LabelTable::new();
    for (node, label) in pending_labels {
        labels.set_label(node, &label);
    }
    Ok((graph, labels))
}

/// Loads just the graph, discarding any labels in the nodes file.
pub fn load_graph(
    nodes_path: impl AsRef<Path>,
    edges_path: impl AsRef<Path>,
    undirected: bool,
) -> Result<HeteroGraph, GraphError> {
    load_dataset(nodes_path, edges_path, undirected).map(|(g, _)| g)
}

/// Writes the nodes file back out: one line per node in id order, with the
/// node's label or `-`.
pub fn write_nodes_tsv(
    graph: &HeteroGraph,
    labels: &LabelTable,
    path: impl AsRef<Path>,
) -> Result<(), GraphError> {
    let path = path.as_ref();
    let mut w = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    for node in graph.nodes() {
        let label = labels
            .label_of(node)
            .map(|l| labels.label_name(l).to_string())
            .unwrap_or_else(|| NO_LABEL.to_string());
        writeln!(
            w,
            "{}\t{}\t{}",
            graph.node_name(node),
            graph.type_name(graph.node_type(node)),
            label
        )
        .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Writes the edges file back out, skipping the auto-synthesised reverse
/// edges so that an undirected graph round-trips to its original edge list.
pub fn write_edges_tsv(graph: &HeteroGraph, path: impl AsRef<Path>) -> Result<(), GraphError> {
    let path = path.as_ref();
    let mut w = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    for edge in graph.edges() {
        let info = graph.relation(edge.relation);
        if info.auto_reverse {
            continue;
        }
        writeln!(
            w,
            "{}\t{}\t{}",
            graph.node_name(edge.src),
            info.name,
            graph.node_name(edge.dst)
        )
        .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}
