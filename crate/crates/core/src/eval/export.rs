//! CSV export and import of relevance and attention matrices.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{EvalError, RelevanceMatrix};
use crate::hetgraph::HeteroGraph;
use crate::tensor::Matrix;

/// Writes the full score matrix as CSV with a leading header row and
/// column naming every node. Scores carry six decimal places.
pub fn export_relevance_matrix(
    m: &RelevanceMatrix,
    graph: &HeteroGraph,
    path: &Path,
) -> Result<(), EvalError> {
    if let Some(&bad) = m.node_index().iter().find(|&&v| v.0 >= graph.node_count()) {
        return Err(EvalError::UnknownNode { index: bad.0, count: graph.node_count() });
    }
    let names: Vec<&str> = m.node_index().iter().map(|&v| graph.node_name(v)).collect();
    let mut out = BufWriter::new(File::create(path)?);
    write_grid(&mut out, "node", &names, &names, |i, j| m.score_at(i, j))?;
    Ok(())
}

/// Writes one CSV file per (layer, head) of type-level attention weights.
///
/// `attention[layer][head]` holds source types in rows and target types in
/// columns, and the files mirror that with type names on both axes. Files
/// are named `<stem>_layer<L>_head<H>.csv` (both axes 1-based) under `dir`,
/// and the list of written paths is returned in that order.
pub fn export_attention(
    graph: &HeteroGraph,
    attention: &[Vec<Matrix>],
    dir: &Path,
    stem: &str,
) -> Result<Vec<PathBuf>, EvalError> {
    let types: Vec<&str> = (0..graph.type_count())
        .map(|t| graph.type_name(crate::hetgraph::TypeId(t)))
        .collect();
    for per_head in attention {
        for matrix in per_head {
            if matrix.shape() != (types.len(), types.len()) {
                return Err(EvalError::InvalidArgument {
                    message: format!(
                        "attention matrix is {}x{} but the graph has {} types",
                        matrix.rows(),
                        matrix.cols(),
                        types.len()
                    ),
                });
            }
        }
    }
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (l, per_head) in attention.iter().enumerate() {
        for (h, matrix) in per_head.iter().enumerate() {
            let path = dir.join(format!("{stem}_layer{}_head{}.csv", l + 1, h + 1));
            let mut out = BufWriter::new(File::create(&path)?);
            write_grid(&mut out, "type", &types, &types, |i, j| matrix.get(i, j))?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Reads a relevance matrix back from the CSV layout written by
/// [`export_relevance_matrix`], resolving node names through the graph.
/// The row and column headers must agree, and the scores must still be
/// symmetric within tolerance (six-decimal rounding preserves that).
pub fn import_relevance_matrix(
    graph: &HeteroGraph,
    path: &Path,
) -> Result<RelevanceMatrix, EvalError> {
    let text = std::fs::read_to_string(path)?;
    let grid = parse_csv(&text);
    let bad = |message: String| EvalError::InvalidArgument { message };
    let Some(header) = grid.first() else {
        return Err(bad(format!("{}: empty matrix file", path.display())));
    };
    if header.first().map(String::as_str) != Some("node") {
        return Err(bad(format!(
            "{}: expected a `node,...` header row",
            path.display()
        )));
    }
    let names = &header[1..];
    if grid.len() != names.len() + 1 {
        return Err(bad(format!(
            "{}: {} header columns but {} data rows",
            path.display(),
            names.len(),
            grid.len() - 1
        )));
    }

    let mut node_index = Vec::with_capacity(names.len());
    for name in names {
        let Some(node) = graph.node_id(name) else {
            return Err(bad(format!(
                "{}: node `{name}` is not in the graph",
                path.display()
            )));
        };
        node_index.push(node);
    }

    let n = names.len();
    let mut scores = Matrix::zeros(n, n);
    for (i, row) in grid[1..].iter().enumerate() {
        if row.len() != n + 1 {
            return Err(bad(format!(
                "{}: row {} has {} fields, expected {}",
                path.display(),
                i + 2,
                row.len(),
                n + 1
            )));
        }
        if row[0] != names[i] {
            return Err(bad(format!(
                "{}: row {} is labeled `{}` but the header says `{}`",
                path.display(),
                i + 2,
                row[0],
                names[i]
            )));
        }
        for (j, field) in row[1..].iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| {
                bad(format!("{}: `{field}` is not a number", path.display()))
            })?;
            scores.set(i, j, value);
        }
    }
    RelevanceMatrix::new(node_index, scores)
}

/// Splits CSV text into fields, honouring quoted fields with doubled
/// inner quotes.
fn parse_csv(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(|line| {
            let mut fields = Vec::new();
            let mut field = String::new();
            let mut quoted = false;
            let mut chars = line.chars().peekable();
            while let Some(c) = chars.next() {
                match c {
                    '"' if quoted && chars.peek() == Some(&'"') => {
                        field.push('"');
                        chars.next();
                    }
                    '"' => quoted = !quoted,
                    ',' if !quoted => fields.push(std::mem::take(&mut field)),
                    other => field.push(other),
                }
            }
            fields.push(field);
            fields
        })
        .collect()
}

/// Lays out a labeled grid as CSV: `corner,col...` then one row per label.
fn write_grid<W: Write>(
    out: &mut W,
    corner: &str,
    row_names: &[&str],
    col_names: &[&str],
    value: impl Fn(usize, usize) -> f64,
) -> std::io::Result<()> {
    write!(out, "{}", csv_field(corner))?;
    for name in col_names {
        write!(out, ",{}", csv_field(name))?;
    }
    writeln!(out)?;
    for (i, name) in row_names.iter().enumerate() {
        write!(out, "{}", csv_field(name))?;
        for j in 0..col_names.len() {
            write!(out, ",{:.6}", value(i, j))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Quotes a field only when it would break the grid otherwise.
fn csv_field(raw: &str) -> String {
    if raw.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", raw.replace('"', "\"\""))
    } else {
        raw.to_string()
    }
}
