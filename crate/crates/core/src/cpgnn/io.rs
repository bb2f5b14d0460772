//! Model persistence: a text header (hyper-parameters and vocabularies)
//! followed by every parameter matrix as little-endian `f64` bytes, in the
//! fixed storage order. Saving and loading round-trip bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::model::{GsimModel, ParamLayout};
use crate::tensor::Matrix;

const MAGIC: &str = "hetrel-model";
const VERSION: &str = "v1";

/// Errors reading or writing a model file.
#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("cannot access model file: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a model file (first line '{found}', expected '{MAGIC} {VERSION}')")]
    BadMagic { found: String },
    #[error("unsupported model file version '{found}' (this build reads {VERSION})")]
    UnsupportedVersion { found: String },
    #[error("model file is corrupt: {message}")]
    Corrupt { message: String },
}

fn corrupt(message: String) -> ModelFileError {
    ModelFileError::Corrupt { message }
}

/// Writes the model to `path`, replacing any existing file.
pub fn save_model(model: &GsimModel, path: &Path) -> Result<(), ModelFileError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{MAGIC} {VERSION}")?;
    writeln!(w, "dim {}", model.dim())?;
    writeln!(w, "depth {}", model.depth())?;
    writeln!(w, "heads {}", model.heads())?;
    // Debug formatting prints the shortest decimal that parses back to the
    // identical f64, so the rate survives the text round trip exactly.
    writeln!(w, "node_dropout {:?}", model.node_dropout())?;
    writeln!(w, "nodes {}", model.node_count())?;
    writeln!(w, "types {}", model.type_names().len())?;
    for name in model.type_names() {
        writeln!(w, "{name}")?;
    }
    writeln!(w, "relations {}", model.relation_names().len())?;
    for name in model.relation_names() {
        writeln!(w, "{name}")?;
    }
    writeln!(w, "params {}", model.params().len())?;
    for (name, m) in model.named_params() {
        writeln!(w, "{} {} {}", m.rows(), m.cols(), name)?;
        for v in m.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn next_line(r: &mut impl BufRead, what: &str) -> Result<String, ModelFileError> {
    let mut line = String::new();
    if r.read_line(&mut line)? == 0 {
        return Err(corrupt(format!("unexpected end of file, expected {what}")));
    }
    if line.ends_with('\n') {
        line.pop();
    }
    Ok(line)
}

fn keyed<T: std::str::FromStr>(r: &mut impl BufRead, key: &str) -> Result<T, ModelFileError> {
    let line = next_line(r, key)?;
    let rest = line
        .strip_prefix(key)
        .and_then(|s| s.strip_prefix(' '))
        .ok_or_else(|| corrupt(format!("expected '{key} <value>', found '{line}'")))?;
    rest.parse().map_err(|_| corrupt(format!("cannot parse '{rest}' as a value for {key}")))
}

/// Reads a model written by [`save_model`], validating the header, every
/// parameter's name and shape against the expected layout, and that the
/// file ends exactly where the last parameter does.
pub fn load_model(path: &Path) -> Result<GsimModel, ModelFileError> {
    let mut r = BufReader::new(File::open(path)?);

    let header = next_line(&mut r, "the format header")?;
    let (magic, version) = header.split_once(' ').unwrap_or((header.as_str(), ""));
    if magic != MAGIC {
        return Err(ModelFileError::BadMagic { found: header });
    }
    if version != VERSION {
        return Err(ModelFileError::UnsupportedVersion { found: version.to_string() });
    }

    let dim: usize = keyed(&mut r, "dim")?;
    let depth: usize = keyed(&mut r, "depth")?;
    let heads: usize = keyed(&mut r, "heads")?;
    let node_dropout: f64 = keyed(&mut r, "node_dropout")?;
    let nodes: usize = keyed(&mut r, "nodes")?;
    if dim == 0 || depth == 0 || heads == 0 || nodes == 0 {
        return Err(corrupt(format!(
            "dimensions must be positive (dim {dim}, depth {depth}, heads {heads}, nodes {nodes})"
        )));
    }
    if dim % heads != 0 {
        return Err(corrupt(format!("heads ({heads}) does not divide dim ({dim})")));
    }
    if !(0.0..1.0).contains(&node_dropout) {
        return Err(corrupt(format!("node_dropout {node_dropout} outside [0, 1)")));
    }

    let type_count: usize = keyed(&mut r, "types")?;
    let type_names: Vec<String> = (0..type_count)
        .map(|i| next_line(&mut r, &format!("type name {i}")))
        .collect::<Result<_, _>>()?;
    let relation_count: usize = keyed(&mut r, "relations")?;
    let relation_names: Vec<String> = (0..relation_count)
        .map(|i| next_line(&mut r, &format!("relation name {i}")))
        .collect::<Result<_, _>>()?;

    let layout = ParamLayout {
        dim,
        depth,
        heads,
        types: type_count,
        relations: relation_count,
        nodes,
    };
    let param_count: usize = keyed(&mut r, "params")?;
    if param_count != layout.total() {
        return Err(corrupt(format!(
            "{param_count} parameters listed, but this configuration has {}",
            layout.total()
        )));
    }

    let mut params = Vec::with_capacity(param_count);
    for (expected_name, rows, cols, _) in layout.manifest(&type_names, &relation_names) {
        let line = next_line(&mut r, &format!("the header of parameter '{expected_name}'"))?;
        let mut fields = line.splitn(3, ' ');
        let parse_shape = |s: Option<&str>| -> Result<usize, ModelFileError> {
            s.and_then(|v| v.parse().ok())
                .ok_or_else(|| corrupt(format!("malformed parameter header '{line}'")))
        };
        let got_rows = parse_shape(fields.next())?;
        let got_cols = parse_shape(fields.next())?;
        let got_name =
            fields.next().ok_or_else(|| corrupt(format!("malformed parameter header '{line}'")))?;
        if got_name != expected_name || got_rows != rows || got_cols != cols {
            return Err(corrupt(format!(
                "expected parameter '{expected_name}' of shape {rows}x{cols}, \
                 found '{got_name}' of shape {got_rows}x{got_cols}"
            )));
        }
        let mut buf = vec![0u8; rows * cols * 8];
        r.read_exact(&mut buf).map_err(|e| {
            if e.kind() == ErrorKind::UnexpectedEof {
                corrupt(format!("parameter '{expected_name}' is truncated"))
            } else {
                ModelFileError::Io(e)
            }
        })?;
        let data: Vec<f64> =
            buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        params.push(Matrix::from_vec(rows, cols, data));
    }

    if r.read(&mut [0u8; 1])? != 0 {
        return Err(corrupt("trailing data after the last parameter".into()));
    }

    Ok(GsimModel {
        dim,
        depth,
        heads,
        node_dropout,
        type_names,
        relation_names,
        node_count: nodes,
        params,
    })
}
