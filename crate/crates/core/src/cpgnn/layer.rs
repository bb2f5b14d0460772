//! Forward computation: per-type graph summaries, multi-head relation
//! attention, relation message passing, stacked layers with a GRU carry,
//! and the per-type length combination into final embeddings.
//!
//! One call runs all `K` layers and reads out every intermediate context
//! matrix, so layer `k`'s output captures length-`k` context. The same code
//! serves training (parameters as tape leaves, node dropout active) and
//! inference (constants, full means).

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::layout::GraphLayout;
use super::model::{GsimModel, ParamLayout, GRU_BH, GRU_BR, GRU_BZ, GRU_WH, GRU_WR, GRU_WZ};
use super::ModelError;
use crate::hetgraph::{HeteroGraph, RelationId};
use crate::tensor::{gru_cell, sigmoid, GruWeights, Matrix, Tape, Tensor};

/// The parameter vector lifted into tensors, either tracked on a tape
/// (training) or as constants (inference). Indexed by [`ParamLayout`].
pub(crate) struct ModelVars {
    pub layout: ParamLayout,
    vars: Vec<Tensor>,
}

impl ModelVars {
    pub fn tracked(model: &GsimModel, tape: &Tape) -> Self {
        Self {
            layout: model.layout(),
            vars: model.params().iter().map(|m| tape.leaf(m.clone())).collect(),
        }
    }

    pub fn frozen(model: &GsimModel) -> Self {
        Self {
            layout: model.layout(),
            vars: model.params().iter().map(|m| Tensor::constant(m.clone())).collect(),
        }
    }

    pub fn get(&self, idx: usize) -> &Tensor {
        &self.vars[idx]
    }

    /// All parameter tensors in storage order, for gradient extraction.
    pub fn ordered(&self) -> &[Tensor] {
        &self.vars
    }

    fn gru_weights(&self, l: usize) -> GruWeights {
        let p = &self.layout;
        GruWeights {
            wz: self.vars[p.gru(l, GRU_WZ)].clone(),
            wr: self.vars[p.gru(l, GRU_WR)].clone(),
            wh: self.vars[p.gru(l, GRU_WH)].clone(),
            bz: self.vars[p.gru(l, GRU_BZ)].clone(),
            br: self.vars[p.gru(l, GRU_BR)].clone(),
            bh: self.vars[p.gru(l, GRU_BH)].clone(),
        }
    }
}

/// Whether a forward pass applies node dropout (training) or full means.
pub(crate) enum ForwardMode<'a> {
    Train { rng: &'a mut ChaCha8Rng, dropout: f64 },
    Inference,
}

/// All `K` context tensors plus the attention values observed per layer
/// and head (rows = source type, cols = target type).
pub(crate) struct ForwardStack {
    pub contexts: Vec<Tensor>,
    pub attention: Vec<Vec<Matrix>>,
}

/// Inference result of [`forward_all`]: plain matrices, no tape.
#[derive(Debug)]
pub struct ForwardOutput {
    /// Context matrices `C^1..C^K`, each `|V| x d`.
    pub contexts: Vec<Matrix>,
    /// `attention[layer][head]` with rows = source type, cols = target type.
    pub attention: Vec<Vec<Matrix>>,
}

/// Result of a single [`layer_forward`] step.
pub struct LayerOutput {
    /// The next context matrix, `|V| x d`.
    pub context: Matrix,
    /// Per-head attention (rows = source type, cols = target type).
    pub attention: Vec<Matrix>,
}

/// Mean of the given rows after independent keep-trials with probability
/// `1 - dropout`; with no generator (inference) or rate 0 it is the exact
/// mean. If every row is dropped the full mean is used instead.
pub fn graph_encoder(
    type_contexts: &Tensor,
    dropout: f64,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<Tensor, ModelError> {
    if !(0.0..1.0).contains(&dropout) {
        return Err(ModelError::InvalidConfig {
            message: format!("node_dropout must lie in [0, 1), got {dropout}"),
        });
    }
    let n = type_contexts.rows();
    if n == 0 {
        return Err(ModelError::InvalidConfig {
            message: "cannot summarise an empty node set".into(),
        });
    }
    match rng {
        Some(rng) if dropout > 0.0 => {
            let keep: Vec<bool> = (0..n).map(|_| rng.gen_bool(1.0 - dropout)).collect();
            Ok(type_contexts.masked_mean_rows(&keep)?)
        }
        _ => Ok(type_contexts.mean_rows(&(0..n).collect::<Vec<_>>())?),
    }
}

/// One summary vector per type, in type order.
fn type_summaries(
    gl: &GraphLayout,
    c_prev: &Tensor,
    mode: &mut ForwardMode,
) -> Result<Vec<Tensor>, ModelError> {
    (0..gl.type_count)
        .map(|t| {
            let gathered = c_prev.gather_rows(&gl.type_rows[t])?;
            match mode {
                ForwardMode::Train { rng, dropout } => {
                    graph_encoder(&gathered, *dropout, Some(&mut **rng))
                }
                ForwardMode::Inference => graph_encoder(&gathered, 0.0, None),
            }
        })
        .collect()
}

/// Attention over source types for every target type and head at layer `l`.
///
/// Returns, per head, the `(pair index, weight)` list driving aggregation,
/// plus per head a type-by-type matrix of the observed values.
fn attention_for_layer(
    gl: &GraphLayout,
    vars: &ModelVars,
    l: usize,
    summaries: &[Tensor],
) -> Result<(Vec<Vec<(usize, Tensor)>>, Vec<Matrix>), ModelError> {
    let p = &vars.layout;
    let scale = 1.0 / (p.dim as f64).sqrt();

    // Query/key projections per (type, head); queries serve targets, keys
    // serve sources, each type owning its own projections per head.
    let mut queries = Vec::with_capacity(gl.type_count);
    let mut keys = Vec::with_capacity(gl.type_count);
    for t in 0..gl.type_count {
        let mut q_row = Vec::with_capacity(p.heads);
        let mut k_row = Vec::with_capacity(p.heads);
        for h in 0..p.heads {
            q_row.push(
                summaries[t].matmul(vars.get(p.query_w(l, t, h)))?.add(vars.get(p.query_b(l, t, h)))?,
            );
            k_row.push(
                summaries[t].matmul(vars.get(p.key_w(l, t, h)))?.add(vars.get(p.key_b(l, t, h)))?,
            );
        }
        queries.push(q_row);
        keys.push(k_row);
    }

    let mut entries: Vec<Vec<(usize, Tensor)>> = (0..p.heads).map(|_| Vec::new()).collect();
    let mut matrices = vec![Matrix::zeros(gl.type_count, gl.type_count); p.heads];
    for t in 0..gl.type_count {
        let pair_ids = &gl.pairs_by_target[t];
        if pair_ids.is_empty() {
            continue;
        }
        for h in 0..p.heads {
            let mut logits: Option<Tensor> = None;
            for &pi in pair_ids {
                let s = gl.pairs[pi].source;
                let logit = queries[t][h].inner_product(&keys[s][h])?.scale(scale);
                logits = Some(match logits.take() {
                    Some(row) => row.concat_cols(&logit)?,
                    None => logit,
                });
            }
            let alpha = logits.expect("target has at least one pair").row_softmax();
            for (j, &pi) in pair_ids.iter().enumerate() {
                matrices[h].set(gl.pairs[pi].source, t, alpha.value().get(0, j));
                entries[h].push((pi, alpha.entry(0, j)?));
            }
        }
    }
    Ok((entries, matrices))
}

/// For each realised (source, target) type pair, the sum over its relations
/// of every edge's message `[c_target ‖ c_source] W_r`, accumulated per
/// target row. The per-edge sum collapses to one in-count row scaling plus
/// one neighbour sum per relation, so no per-edge vector is materialised.
fn pair_message_sums(
    gl: &GraphLayout,
    vars: &ModelVars,
    c_prev: &Tensor,
) -> Result<Vec<Tensor>, ModelError> {
    let p = &vars.layout;
    gl.pairs
        .iter()
        .map(|pair| {
            let mut sum: Option<Tensor> = None;
            for &r in &pair.relations {
                let own = c_prev.row_scale(&gl.rel_in_counts[r])?;
                let neighbours = c_prev.neighbor_sum(&gl.rel_edges[r])?;
                let m = own.concat_cols(&neighbours)?.matmul(vars.get(p.relation_w(r)))?;
                sum = Some(match sum.take() {
                    Some(s) => s.add(&m)?,
                    None => m,
                });
            }
            Ok(sum.expect("pair has at least one relation"))
        })
        .collect()
}

/// Attention-weighted sum of pair message sums for one head.
fn weighted_message_sum(
    entries: &[(usize, Tensor)],
    pair_sums: &[Tensor],
    rows: usize,
    cols: usize,
) -> Result<Tensor, ModelError> {
    let mut acc: Option<Tensor> = None;
    for (pi, weight) in entries {
        let term = pair_sums[*pi].mul_scalar(weight)?;
        acc = Some(match acc.take() {
            Some(a) => a.add(&term)?,
            None => term,
        });
    }
    Ok(acc.unwrap_or_else(|| Tensor::constant(Matrix::zeros(rows, cols))))
}

/// One full layer: summaries, attention, message aggregation, per-head
/// transform, head concatenation, output projection, in-degree masking,
/// and the GRU carry.
fn layer_step(
    gl: &GraphLayout,
    vars: &ModelVars,
    l: usize,
    c_prev: &Tensor,
    mode: &mut ForwardMode,
) -> Result<(Tensor, Vec<Matrix>), ModelError> {
    let p = vars.layout;
    let summaries = type_summaries(gl, c_prev, mode)?;
    let (entries, matrices) = attention_for_layer(gl, vars, l, &summaries)?;
    let pair_sums = pair_message_sums(gl, vars, c_prev)?;

    let mut joined: Option<Tensor> = None;
    for h in 0..p.heads {
        let aggregated = weighted_message_sum(&entries[h], &pair_sums, gl.node_count, p.dim)?;
        let pre = aggregated.matmul(vars.get(p.w1(l)))?.add_row_broadcast(vars.get(p.b1(l)))?;
        // Checked before the rectifier, which would silently turn NaN into 0.
        if !pre.value().is_finite() {
            return Err(ModelError::NonFiniteActivation { layer: l + 1, context: format!("head {h}") });
        }
        let u = pre.relu();
        joined = Some(match joined.take() {
            Some(c) => c.concat_cols(&u)?,
            None => u,
        });
    }
    let heads = joined.expect("at least one head");
    let projected = heads.matmul(vars.get(p.w2(l)))?.add_row_broadcast(vars.get(p.b2(l)))?;
    // Nodes with no incoming edges receive no messages; zero their rows so
    // the biases cannot leak in, leaving them the GRU carry only.
    let candidate = projected.row_scale(&gl.in_mask)?;
    let next = gru_cell(c_prev, &candidate, &vars.gru_weights(l))?;
    if !next.value().is_finite() {
        return Err(ModelError::NonFiniteActivation { layer: l + 1, context: "gru output".into() });
    }
    Ok((next, matrices))
}

/// Runs all `K` layers from the embedding table, reading out every layer.
pub(crate) fn forward_layers(
    gl: &GraphLayout,
    vars: &ModelVars,
    mode: &mut ForwardMode,
) -> Result<ForwardStack, ModelError> {
    let p = vars.layout;
    let mut c_prev = vars.get(p.z()).clone();
    let mut contexts = Vec::with_capacity(p.depth);
    let mut attention = Vec::with_capacity(p.depth);
    for l in 0..p.depth {
        let (next, matrices) = layer_step(gl, vars, l, &c_prev, mode)?;
        attention.push(matrices);
        contexts.push(next.clone());
        c_prev = next;
    }
    Ok(ForwardStack { contexts, attention })
}

/// Per-type weighted sum of the `K` context matrices with the learned
/// length scores: row `i` of the result is `Σ_k alpha[type(i)][k] * C^k_i`.
pub(crate) fn combine_lengths(
    gl: &GraphLayout,
    vars: &ModelVars,
    contexts: &[Tensor],
) -> Result<Tensor, ModelError> {
    let p = vars.layout;
    let alpha = vars.get(p.alpha());
    let mut acc: Option<Tensor> = None;
    for (k, context) in contexts.iter().enumerate() {
        for t in 0..gl.type_count {
            let weight = alpha.entry(t, k)?;
            let term = context.row_scale(&gl.type_masks[t])?.mul_scalar(&weight)?;
            acc = Some(match acc.take() {
                Some(a) => a.add(&term)?,
                None => term,
            });
        }
    }
    Ok(acc.expect("at least one layer"))
}

/// Inference pass over all layers: no dropout when `dropout_rng` is `None`,
/// reproducible dropout when a generator is supplied.
pub fn forward_all(
    g: &HeteroGraph,
    model: &GsimModel,
    dropout_rng: Option<&mut ChaCha8Rng>,
) -> Result<ForwardOutput, ModelError> {
    model.matches_graph(g)?;
    let gl = GraphLayout::new(g);
    let vars = ModelVars::frozen(model);
    let mut mode = match dropout_rng {
        Some(rng) => ForwardMode::Train { rng, dropout: model.node_dropout() },
        None => ForwardMode::Inference,
    };
    let stack = forward_layers(&gl, &vars, &mut mode)?;
    Ok(ForwardOutput {
        contexts: stack.contexts.iter().map(|t| t.value().clone()).collect(),
        attention: stack.attention,
    })
}

/// A single layer applied to an explicit context matrix, without dropout.
/// `layer` is 1-based: layer `k` produces length-`k` context vectors.
pub fn layer_forward(
    g: &HeteroGraph,
    model: &GsimModel,
    c_prev: &Matrix,
    layer: usize,
) -> Result<LayerOutput, ModelError> {
    model.matches_graph(g)?;
    if layer == 0 || layer > model.depth() {
        return Err(ModelError::InvalidConfig {
            message: format!("layer {layer} out of range 1..={}", model.depth()),
        });
    }
    if c_prev.shape() != (g.node_count(), model.dim()) {
        return Err(ModelError::InvalidConfig {
            message: format!(
                "context matrix is {}x{}, expected {}x{}",
                c_prev.rows(),
                c_prev.cols(),
                g.node_count(),
                model.dim()
            ),
        });
    }
    let gl = GraphLayout::new(g);
    let vars = ModelVars::frozen(model);
    let (next, attention) =
        layer_step(&gl, &vars, layer - 1, &Tensor::constant(c_prev.clone()), &mut ForwardMode::Inference)?;
    Ok(LayerOutput { context: next.value().clone(), attention })
}

/// The attention matrix (rows = source type, cols = target type) a layer
/// and head would produce from the given previous contexts, at inference.
pub fn relation_attention(
    g: &HeteroGraph,
    model: &GsimModel,
    c_prev: &Matrix,
    layer: usize,
    head: usize,
) -> Result<Matrix, ModelError> {
    model.matches_graph(g)?;
    if layer == 0 || layer > model.depth() {
        return Err(ModelError::InvalidConfig {
            message: format!("layer {layer} out of range 1..={}", model.depth()),
        });
    }
    if head >= model.heads() {
        return Err(ModelError::InvalidConfig {
            message: format!("head {head} out of range 0..{}", model.heads()),
        });
    }
    let gl = GraphLayout::new(g);
    let vars = ModelVars::frozen(model);
    let c_prev = Tensor::constant(c_prev.clone());
    let summaries = type_summaries(&gl, &c_prev, &mut ForwardMode::Inference)?;
    let (_, mut matrices) = attention_for_layer(&gl, &vars, layer - 1, &summaries)?;
    Ok(matrices.swap_remove(head))
}

/// Stacked `[I; I]` weight: applied to `[c_target ‖ c_source]` it yields
/// the plain sum of the two endpoint vectors.
pub fn sum_extractor(dim: usize) -> Matrix {
    let mut w = Matrix::zeros(2 * dim, dim);
    for i in 0..dim {
        w.set(i, i, 1.0);
        w.set(dim + i, i, 1.0);
    }
    w
}

/// Applies a `2d x d` message weight to the concatenation of a target and a
/// source vector, yielding the `d`-wide edge message.
pub fn apply_message_weight(weight: &Matrix, target: &[f64], source: &[f64]) -> Vec<f64> {
    assert_eq!(target.len() + source.len(), weight.rows(), "weight expects the joint width");
    let mut joint = Vec::with_capacity(target.len() + source.len());
    joint.extend_from_slice(target);
    joint.extend_from_slice(source);
    let row = Matrix::from_vec(1, joint.len(), joint);
    row.matmul(weight).data().to_vec()
}

/// The message a relation's learned weight produces for one edge, given
/// the target's and the source's current context vectors.
pub fn relation_message(
    model: &GsimModel,
    relation: RelationId,
    target: &[f64],
    source: &[f64],
) -> Result<Vec<f64>, ModelError> {
    if relation.0 >= model.relation_names().len() {
        return Err(ModelError::UnknownRelation {
            index: relation.0,
            count: model.relation_names().len(),
        });
    }
    let d = model.dim();
    if target.len() != d || source.len() != d {
        return Err(ModelError::InvalidConfig {
            message: format!(
                "context vectors must have width {d}, got {} and {}",
                target.len(),
                source.len()
            ),
        });
    }
    let layout = model.layout();
    Ok(apply_message_weight(&model.params()[layout.relation_w(relation.0)], target, source))
}

/// Combines explicit context matrices with the model's length scores.
pub fn type_length_combine(
    g: &HeteroGraph,
    model: &GsimModel,
    contexts: &[Matrix],
) -> Result<Matrix, ModelError> {
    model.matches_graph(g)?;
    if contexts.len() != model.depth() {
        return Err(ModelError::InvalidConfig {
            message: format!("expected {} context matrices, got {}", model.depth(), contexts.len()),
        });
    }
    for (k, c) in contexts.iter().enumerate() {
        if c.shape() != (g.node_count(), model.dim()) {
            return Err(ModelError::InvalidConfig {
                message: format!(
                    "context {} is {}x{}, expected {}x{}",
                    k + 1,
                    c.rows(),
                    c.cols(),
                    g.node_count(),
                    model.dim()
                ),
            });
        }
    }
    let gl = GraphLayout::new(g);
    let vars = ModelVars::frozen(model);
    let tensors: Vec<Tensor> = contexts.iter().map(|c| Tensor::constant(c.clone())).collect();
    Ok(combine_lengths(&gl, &vars, &tensors)?.value().clone())
}

/// Full inference: all layers, then the per-type length combination.
/// Returns the final `|V| x d` embedding matrix.
pub fn embed_nodes(g: &HeteroGraph, model: &GsimModel) -> Result<Matrix, ModelError> {
    model.matches_graph(g)?;
    let gl = GraphLayout::new(g);
    let vars = ModelVars::frozen(model);
    let stack = forward_layers(&gl, &vars, &mut ForwardMode::Inference)?;
    Ok(combine_lengths(&gl, &vars, &stack.contexts)?.value().clone())
}

/// Relevance of two nodes given the final embeddings: the sigmoid of the
/// inner product of their rows, scaled by the embedding width. The carry
/// cell bounds every context coordinate by one, so the width-scaled product
/// of length-combined embeddings stays well inside the sigmoid's working
/// range instead of flattening onto its tails. Exactly symmetric in its
/// arguments, and the same convention the training losses score pairs with.
pub fn relevance(embeddings: &Matrix, i: usize, j: usize) -> Result<f64, ModelError> {
    let n = embeddings.rows();
    if i >= n {
        return Err(ModelError::UnknownNode { index: i, count: n });
    }
    if j >= n {
        return Err(ModelError::UnknownNode { index: j, count: n });
    }
    let dot: f64 =
        embeddings.row(i).iter().zip(embeddings.row(j)).map(|(a, b)| a * b).sum();
    Ok(sigmoid(dot / embeddings.cols() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpgnn::model::{init_model, TrainConfig};
    use crate::hetgraph::NodeId;
    use crate::measures::{gnn_identity_embeddings, gnn_identity_relevance, prw_brute};
    use rand::SeedableRng;

    fn config(dim: usize, depth: usize, heads: usize) -> TrainConfig {
        TrainConfig { dim, depth, heads, ..TrainConfig::default() }
    }

    /// a - b - c, a single node type, one undirected relation.
    fn path3() -> HeteroGraph {
        let mut b = HeteroGraph::builder(true);
        for name in ["a", "b", "c"] {
            b.add_node(name, "T").unwrap();
        }
        b.add_edge("a", "e", "b").unwrap();
        b.add_edge("b", "e", "c").unwrap();
        b.finish()
    }

    fn cycle(n: usize) -> HeteroGraph {
        let mut b = HeteroGraph::builder(true);
        for i in 0..n {
            b.add_node(&format!("v{i}"), "T").unwrap();
        }
        for i in 0..n {
            b.add_edge(&format!("v{i}"), "e", &format!("v{}", (i + 1) % n)).unwrap();
        }
        b.finish()
    }

    fn complete(n: usize) -> HeteroGraph {
        let mut b = HeteroGraph::builder(true);
        for i in 0..n {
            b.add_node(&format!("v{i}"), "T").unwrap();
        }
        for i in 0..n {
            for j in (i + 1)..n {
                b.add_edge(&format!("v{i}"), "e", &format!("v{j}")).unwrap();
            }
        }
        b.finish()
    }

    /// x:S1 and y:S2 both feed z:T through their own relations.
    fn two_sources() -> HeteroGraph {
        let mut b = HeteroGraph::builder(false);
        b.add_node("x", "S1").unwrap();
        b.add_node("y", "S2").unwrap();
        b.add_node("z", "T").unwrap();
        b.add_edge("x", "r1", "z").unwrap();
        b.add_edge("y", "r2", "z").unwrap();
        b.finish()
    }

    #[test]
    fn encoder_without_dropout_is_the_exact_mean() {
        let rows = Tensor::constant(Matrix::from_rows(&[&[1.0, 10.0], &[2.0, 20.0], &[3.0, 30.0]]));
        let h = graph_encoder(&rows, 0.0, None).unwrap();
        assert_eq!(h.value(), &Matrix::from_rows(&[&[2.0, 20.0]]));
    }

    #[test]
    fn encoder_single_row_survives_any_dropout() {
        let row = Tensor::constant(Matrix::from_rows(&[&[5.0, 7.0]]));
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = graph_encoder(&row, 0.99, Some(&mut rng)).unwrap();
            assert_eq!(h.value(), &Matrix::from_rows(&[&[5.0, 7.0]]));
        }
    }

    #[test]
    fn encoder_dropout_reproduces_the_survivor_mean() {
        let values = [1.0, 2.0, 4.0, 8.0, 16.0];
        let rows = Tensor::constant(Matrix::from_vec(5, 1, values.to_vec()));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = graph_encoder(&rows, 0.5, Some(&mut rng)).unwrap();

        // Replay the same generator to learn the survivor set independently.
        let mut replay = ChaCha8Rng::seed_from_u64(11);
        let keep: Vec<bool> = (0..5).map(|_| replay.gen_bool(0.5)).collect();
        let survivors: Vec<f64> =
            values.iter().zip(&keep).filter(|(_, &k)| k).map(|(&v, _)| v).collect();
        let expected = if survivors.is_empty() {
            values.iter().sum::<f64>() / 5.0
        } else {
            survivors.iter().sum::<f64>() / survivors.len() as f64
        };
        assert_eq!(h.value().get(0, 0), expected);

        let mut again = ChaCha8Rng::seed_from_u64(11);
        let h2 = graph_encoder(&rows, 0.5, Some(&mut again)).unwrap();
        assert_eq!(h.value(), h2.value());
    }

    #[test]
    fn encoder_rejects_empty_input_and_bad_rate() {
        let empty = Tensor::constant(Matrix::zeros(0, 3));
        assert!(graph_encoder(&empty, 0.0, None).is_err());
        let row = Tensor::constant(Matrix::zeros(1, 3));
        assert!(graph_encoder(&row, 1.0, None).is_err());
    }

    #[test]
    fn attention_on_identical_sources_with_shared_projections_is_half() {
        let g = two_sources();
        let mut model = init_model(&g, &config(2, 1, 1)).unwrap();
        let layout = model.layout();
        // Share the key projection between the two source types.
        let kw = model.params()[layout.key_w(0, 0, 0)].clone();
        model.params_mut()[layout.key_w(0, 1, 0)] = kw;
        // Identical source rows give identical summaries.
        let c = Matrix::from_rows(&[&[0.3, -0.7], &[0.3, -0.7], &[1.0, 2.0]]);
        let att = relation_attention(&g, &model, &c, 1, 0).unwrap();
        assert_eq!(att.get(0, 2), 0.5);
        assert_eq!(att.get(1, 2), 0.5);
        // S1 and S2 receive nothing, so their columns stay empty.
        assert_eq!(att.get(2, 0), 0.0);
    }

    #[test]
    fn attention_with_a_single_source_is_exactly_one() {
        let mut b = HeteroGraph::builder(false);
        b.add_node("x", "S").unwrap();
        b.add_node("z", "T").unwrap();
        b.add_node("w", "U").unwrap();
        b.add_edge("x", "r", "z").unwrap();
        b.add_edge("x", "q", "w").unwrap();
        let g = b.finish();
        let model = init_model(&g, &config(4, 1, 2)).unwrap();
        let z = model.params()[0].clone();
        let att = relation_attention(&g, &model, &z, 1, 1).unwrap();
        assert_eq!(att.get(0, 1), 1.0);
        assert_eq!(att.get(0, 2), 1.0);
    }

    #[test]
    fn attention_matches_a_hand_softmax_of_the_logits() {
        let g = two_sources();
        let mut model = init_model(&g, &config(1, 1, 1)).unwrap();
        let layout = model.layout();
        for idx in [
            layout.query_w(0, 2, 0),
            layout.key_w(0, 0, 0),
            layout.key_w(0, 1, 0),
        ] {
            model.params_mut()[idx] = Matrix::scalar(1.0);
        }
        // Summaries: x -> 1, y -> 0, z -> 1; d = 1 so the scale is 1 and
        // the logits over (S1, S2) are (1, 0).
        let c = Matrix::from_vec(3, 1, vec![1.0, 0.0, 1.0]);
        let att = relation_attention(&g, &model, &c, 1, 0).unwrap();
        let expected = 1.0 / (1.0 + (-1.0f64).exp());
        assert!((att.get(0, 2) - expected).abs() < 1e-15);
        assert!((att.get(1, 2) - (1.0 - expected)).abs() < 1e-15);
        assert!((att.get(0, 2) - 0.7310585786300049).abs() < 1e-12);
    }

    #[test]
    fn attention_rows_sum_to_one_for_every_target_head_and_layer() {
        for seed in [3, 17, 40] {
            let g = crate::synthetic::random_graph(seed, 12);
            let model = init_model(&g, &config(8, 2, 2)).unwrap();
            let out = forward_all(&g, &model, None).unwrap();
            let fed_targets: Vec<bool> = {
                let mut fed = vec![false; g.type_count()];
                for (_, info) in g.relations() {
                    fed[info.target_type.0] = true;
                }
                fed
            };
            for per_layer in &out.attention {
                for att in per_layer {
                    for (t, &fed) in fed_targets.iter().enumerate() {
                        let sum: f64 = (0..g.type_count()).map(|s| att.get(s, t)).sum();
                        if fed {
                            assert!((sum - 1.0).abs() <= 1e-12, "seed {seed}: column sums to {sum}");
                        } else {
                            assert_eq!(sum, 0.0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn sum_extractor_message_adds_the_endpoints() {
        let g = path3();
        let mut model = init_model(&g, &config(3, 1, 1)).unwrap();
        let layout = model.layout();
        model.params_mut()[layout.relation_w(0)] = sum_extractor(3);
        let m = relation_message(
            &model,
            crate::hetgraph::RelationId(0),
            &[1.0, 2.0, 3.0],
            &[10.0, 20.0, 30.0],
        )
        .unwrap();
        assert_eq!(m, vec![11.0, 22.0, 33.0]);

        assert!(relation_message(&model, crate::hetgraph::RelationId(9), &[0.0; 3], &[0.0; 3]).is_err());
        assert!(relation_message(&model, crate::hetgraph::RelationId(0), &[0.0; 2], &[0.0; 3]).is_err());
    }

    #[test]
    fn sum_extractor_messages_are_distinct_across_node_pairs() {
        // One-hot embeddings for 50 nodes: the message for the unordered
        // pair {i, j} is e_i + e_j, and for i = j it is 2 e_i.
        let n = 50;
        let w = sum_extractor(n);
        let mut seen = std::collections::HashSet::new();
        for i in 0..n {
            for j in i..n {
                let mut ei = vec![0.0; n];
                ei[i] = 1.0;
                let mut ej = vec![0.0; n];
                ej[j] = 1.0;
                let m = apply_message_weight(&w, &ei, &ej);
                let key: Vec<u64> = m.iter().map(|x| x.to_bits()).collect();
                assert!(seen.insert(key), "pair ({i}, {j}) collided");
            }
        }
        assert_eq!(seen.len(), n * (n + 1) / 2);
    }

    #[test]
    fn pair_sums_match_per_edge_enumeration() {
        for seed in [1, 8, 23] {
            let g = crate::synthetic::random_graph(seed, 10);
            let d = 4;
            let model = init_model(&g, &config(d, 1, 1)).unwrap();
            let gl = GraphLayout::new(&g);
            let vars = ModelVars::frozen(&model);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
            let c = Matrix::xavier_uniform(g.node_count(), d, &mut rng);
            let sums = pair_message_sums(&gl, &vars, &Tensor::constant(c.clone())).unwrap();

            for (pi, pair) in gl.pairs.iter().enumerate() {
                let mut manual = Matrix::zeros(g.node_count(), d);
                for &r in &pair.relations {
                    let w = &model.params()[model.layout().relation_w(r)];
                    for &(dst, src) in &gl.rel_edges[r] {
                        let m = apply_message_weight(w, c.row(dst), c.row(src));
                        for (col, v) in m.into_iter().enumerate() {
                            manual.set(dst, col, manual.get(dst, col) + v);
                        }
                    }
                }
                let got = sums[pi].value();
                for r in 0..g.node_count() {
                    for col in 0..d {
                        assert!(
                            (got.get(r, col) - manual.get(r, col)).abs() < 1e-10,
                            "seed {seed}, pair {pi}, entry ({r}, {col})"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn aggregation_expands_by_hand_on_a_three_node_path() {
        // Sum-extractor messages with attention pinned at 1 give
        // Σ_{j ∈ N(i)} (c_i + c_j) = deg(i) c_i + Σ_j c_j.
        let g = path3();
        let d = 2;
        let mut model = init_model(&g, &config(d, 1, 1)).unwrap();
        let layout = model.layout();
        model.params_mut()[layout.relation_w(0)] = sum_extractor(d);
        model.params_mut()[layout.relation_w(1)] = sum_extractor(d);
        let gl = GraphLayout::new(&g);
        let vars = ModelVars::frozen(&model);
        let c = Matrix::from_rows(&[&[1.0, 2.0], &[4.0, 8.0], &[16.0, 32.0]]);
        let sums = pair_message_sums(&gl, &vars, &Tensor::constant(c)).unwrap();
        // Single (T, T) pair, so attention would be exactly 1.
        assert_eq!(gl.pairs.len(), 1);
        let one = (0, Tensor::constant(Matrix::scalar(1.0)));
        let agg = weighted_message_sum(&[one], &sums, 3, d).unwrap();
        let expected = Matrix::from_rows(&[
            &[1.0 + 4.0, 2.0 + 8.0],          // deg(a)=1: c_a + c_b
            &[2.0 * 4.0 + 17.0, 2.0 * 8.0 + 34.0], // deg(b)=2: 2c_b + c_a + c_c
            &[16.0 + 4.0, 32.0 + 8.0],        // deg(c)=1: c_c + c_b
        ]);
        assert_eq!(agg.value(), &expected);
    }

    #[test]
    fn identity_setup_reproduces_the_walk_operator_on_regular_graphs() {
        // Neighbour-extracting messages scaled by 1/degree turn one
        // aggregation step into the random-walk operator; k steps from the
        // identity must then match the k-step walk embeddings, and row
        // inner products the meeting probabilities.
        for (g, degree) in [(cycle(6), 2.0), (complete(4), 3.0)] {
            let n = g.node_count();
            let mut model = init_model(&g, &config(n, 1, 1)).unwrap();
            let layout = model.layout();
            let mut w = Matrix::zeros(2 * n, n);
            for i in 0..n {
                w.set(n + i, i, 1.0 / degree);
            }
            model.params_mut()[layout.relation_w(0)] = w.clone();
            model.params_mut()[layout.relation_w(1)] = w;
            let gl = GraphLayout::new(&g);
            let vars = ModelVars::frozen(&model);
            assert_eq!(gl.pairs.len(), 1);

            let mut c = Tensor::constant(Matrix::identity(n));
            for k in 1..=3usize {
                let sums = pair_message_sums(&gl, &vars, &c).unwrap();
                let one = (0, Tensor::constant(Matrix::scalar(1.0)));
                c = weighted_message_sum(&[one], &sums, n, n).unwrap();

                let walk = gnn_identity_embeddings(&g, k);
                for i in 0..n {
                    for j in 0..n {
                        assert!((c.value().get(i, j) - walk.get(i, j)).abs() < 1e-12);
                    }
                }
                for i in 0..n {
                    for j in 0..n {
                        let from_layers: f64 =
                            c.value().row(i).iter().zip(c.value().row(j)).map(|(a, b)| a * b).sum();
                        let meet = prw_brute(&g, NodeId(i), NodeId(j), 2 * k).unwrap();
                        assert!(
                            (from_layers - meet).abs() < 1e-10,
                            "k={k}, pair ({i}, {j}): {from_layers} vs {meet}"
                        );
                        let reference = gnn_identity_relevance(&g, NodeId(i), NodeId(j), k).unwrap();
                        assert!((from_layers - reference).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn nodes_without_incoming_edges_keep_only_the_gru_carry() {
        let mut b = HeteroGraph::builder(false);
        b.add_node("x", "A").unwrap();
        b.add_node("y", "B").unwrap();
        b.add_node("z", "C").unwrap();
        b.add_edge("x", "r", "y").unwrap();
        b.add_edge("y", "s", "z").unwrap();
        let g = b.finish();
        let d = 4;
        let model = init_model(&g, &config(d, 1, 1)).unwrap();
        let c_prev = model.params()[0].clone();
        let out = layer_forward(&g, &model, &c_prev, 1).unwrap();

        // Row of x (no incoming edges) must equal gru(previous, zero row).
        let layout = model.layout();
        let weights = GruWeights {
            wz: Tensor::constant(model.params()[layout.gru(0, GRU_WZ)].clone()),
            wr: Tensor::constant(model.params()[layout.gru(0, GRU_WR)].clone()),
            wh: Tensor::constant(model.params()[layout.gru(0, GRU_WH)].clone()),
            bz: Tensor::constant(model.params()[layout.gru(0, GRU_BZ)].clone()),
            br: Tensor::constant(model.params()[layout.gru(0, GRU_BR)].clone()),
            bh: Tensor::constant(model.params()[layout.gru(0, GRU_BH)].clone()),
        };
        let prev_row = Tensor::constant(Matrix::from_vec(1, d, c_prev.row(0).to_vec()));
        let zero = Tensor::constant(Matrix::zeros(1, d));
        let expected = gru_cell(&prev_row, &zero, &weights).unwrap();
        assert_eq!(out.context.row(0), expected.value().row(0));
        assert_eq!(out.context.shape(), (3, d));
    }

    #[test]
    fn single_layer_model_forward_all_equals_layer_forward() {
        let g = two_sources();
        let model = init_model(&g, &config(4, 1, 2)).unwrap();
        let z = model.params()[0].clone();
        let full = forward_all(&g, &model, None).unwrap();
        let single = layer_forward(&g, &model, &z, 1).unwrap();
        assert_eq!(full.contexts.len(), 1);
        assert_eq!(full.contexts[0].data(), single.context.data());
        for (a, b) in full.attention[0].iter().zip(&single.attention) {
            assert_eq!(a.data(), b.data());
        }
    }

    #[test]
    fn inference_is_deterministic() {
        let g = crate::synthetic::random_graph(5, 10);
        let model = init_model(&g, &config(8, 3, 2)).unwrap();
        let a = forward_all(&g, &model, None).unwrap();
        let b = forward_all(&g, &model, None).unwrap();
        for (x, y) in a.contexts.iter().zip(&b.contexts) {
            assert_eq!(x.data(), y.data());
        }
    }

    #[test]
    fn overflow_in_a_layer_reports_the_layer() {
        let g = path3();
        let mut model = init_model(&g, &config(2, 2, 1)).unwrap();
        let layout = model.layout();
        model.params_mut()[layout.z()] = Matrix::filled(3, 2, 1e200);
        model.params_mut()[layout.relation_w(0)] = Matrix::filled(4, 2, 1e200);
        let err = forward_all(&g, &model, None).unwrap_err();
        match err {
            ModelError::NonFiniteActivation { layer, .. } => assert_eq!(layer, 1),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn length_combination_follows_the_scores() {
        let g = two_sources();
        let mut model = init_model(&g, &config(2, 2, 1)).unwrap();
        let layout = model.layout();
        let c1 = Matrix::from_rows(&[&[1.0, 0.0], &[2.0, 0.0], &[3.0, 0.0]]);
        let c2 = Matrix::from_rows(&[&[0.0, 4.0], &[0.0, 5.0], &[0.0, 6.0]]);

        // All scores 1: plain sum across lengths.
        let h = type_length_combine(&g, &model, &[c1.clone(), c2.clone()]).unwrap();
        assert_eq!(h, c1.add(&c2));

        // Scores (1, 0) for every type: only the first length remains.
        model.params_mut()[layout.alpha()] =
            Matrix::from_rows(&[&[1.0, 0.0], &[1.0, 0.0], &[1.0, 0.0]]);
        let h = type_length_combine(&g, &model, &[c1.clone(), c2.clone()]).unwrap();
        assert_eq!(h, c1);

        // Midpoint scores halve the sum; types can differ.
        model.params_mut()[layout.alpha()] =
            Matrix::from_rows(&[&[0.5, 0.5], &[0.5, 0.5], &[1.0, 0.0]]);
        let h = type_length_combine(&g, &model, &[c1.clone(), c2.clone()]).unwrap();
        assert_eq!(h.row(0), c1.add(&c2).scale(0.5).row(0));
        assert_eq!(h.row(2), c1.row(2));

        // A single-layer model returns C^1 untouched under unit scores.
        let single = init_model(&g, &config(2, 1, 1)).unwrap();
        let h = type_length_combine(&g, &single, &[c1.clone()]).unwrap();
        assert_eq!(h, c1);
    }

    #[test]
    fn relevance_is_a_symmetric_sigmoid_score() {
        let h = Matrix::from_rows(&[&[1.0, 0.0], &[0.0, 1.0], &[2.0, 0.0]]);
        // Orthogonal rows: exactly one half.
        assert_eq!(relevance(&h, 0, 1).unwrap(), 0.5);
        // Self score with squared norm 4, scaled down by the width of 2.
        let s = relevance(&h, 2, 2).unwrap();
        assert_eq!(s, 1.0 / (1.0 + (-2.0_f64).exp()));
        // Exact symmetry, and strict (0, 1) bounds.
        let a = relevance(&h, 0, 2).unwrap();
        let b = relevance(&h, 2, 0).unwrap();
        assert_eq!(a, b);
        assert!(a > 0.0 && a < 1.0);
        assert!(relevance(&h, 3, 0).is_err());
    }

    #[test]
    fn embeddings_require_the_matching_graph() {
        let g = two_sources();
        let model = init_model(&g, &config(4, 2, 2)).unwrap();
        assert!(embed_nodes(&g, &model).is_ok());
        let other = path3();
        assert!(matches!(embed_nodes(&other, &model), Err(ModelError::GraphMismatch { .. })));
    }
}
