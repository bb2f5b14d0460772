//! Model parameters, hyper-parameter configuration, and seeded
//! initialisation.
//!
//! All parameters live in one flat `Vec<Matrix>` whose order is fixed by
//! [`ParamLayout`]. The same order drives the optimiser, gradient
//! extraction, and the model file format, so it must never change between
//! writing and reading a model.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ModelError;
use crate::hetgraph::HeteroGraph;
use crate::tensor::Matrix;

/// Hyper-parameters for building and training a [`GsimModel`].
#[derive(Clone, Debug)]
pub struct TrainConfig {
    /// Embedding width `d`.
    pub dim: usize,
    /// Number of stacked layers `K`; layer `k` captures length-`k` context.
    pub depth: usize,
    /// Attention heads `H`; must divide `dim`.
    pub heads: usize,
    /// Probability of dropping a node from a type summary during training.
    pub node_dropout: f64,
    /// Adam learning rate.
    pub learning_rate: f64,
    /// Upper bound on training epochs.
    pub max_epochs: usize,
    /// Stop after this many epochs without a new best validation loss;
    /// `None` trains for the full `max_epochs`.
    pub patience: Option<usize>,
    /// Seed for initialisation and node dropout.
    pub seed: u64,
    /// Weights `(w_contrast, w_self)` of the two loss terms.
    pub loss_balance: (f64, f64),
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dim: 128,
            depth: 4,
            heads: 2,
            node_dropout: 0.3,
            learning_rate: 0.05,
            max_epochs: 200,
            patience: None,
            seed: 0,
            loss_balance: (1.0, 1.0),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let fail = |message: String| Err(ModelError::InvalidConfig { message });
        if self.dim == 0 {
            return fail("dim must be at least 1".into());
        }
        if self.depth == 0 {
            return fail("depth must be at least 1".into());
        }
        if self.heads == 0 {
            return fail("heads must be at least 1".into());
        }
        if self.dim % self.heads != 0 {
            return fail(format!("heads ({}) must divide dim ({})", self.heads, self.dim));
        }
        if !(0.0..1.0).contains(&self.node_dropout) {
            return fail(format!("node_dropout must lie in [0, 1), got {}", self.node_dropout));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return fail(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if self.max_epochs == 0 {
            return fail("max_epochs must be at least 1".into());
        }
        if self.patience == Some(0) {
            return fail("patience must be at least 1 when set".into());
        }
        let (ws, wu) = self.loss_balance;
        if !(ws.is_finite() && wu.is_finite() && ws >= 0.0 && wu >= 0.0) {
            return fail(format!("loss balance must be finite and non-negative, got {ws}:{wu}"));
        }
        if ws == 0.0 && wu == 0.0 {
            return fail("loss balance must not be 0:0".into());
        }
        Ok(())
    }
}

/// What a parameter matrix is, which decides how it is initialised.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum ParamKind {
    /// Xavier-uniform weight.
    Weight,
    /// Zero-initialised bias row.
    Bias,
    /// Length-attention scores, initialised to one.
    LengthScores,
}

/// Index arithmetic for the flat parameter vector.
///
/// Order: node embeddings; one message weight per relation; per layer the
/// per-(type, head) query/key projections, the shared head transform
/// `W1`/`B1`, the output projection `W2`/`B2`, and the GRU gates; finally
/// the per-type length scores.
#[derive(Clone, Copy, Debug)]
pub(crate) struct ParamLayout {
    pub dim: usize,
    pub depth: usize,
    pub heads: usize,
    pub types: usize,
    pub relations: usize,
    pub nodes: usize,
}

/// Offsets of the six GRU matrices within a layer block.
pub(crate) const GRU_WZ: usize = 0;
pub(crate) const GRU_BZ: usize = 1;
pub(crate) const GRU_WR: usize = 2;
pub(crate) const GRU_BR: usize = 3;
pub(crate) const GRU_WH: usize = 4;
pub(crate) const GRU_BH: usize = 5;

impl ParamLayout {
    fn per_layer(&self) -> usize {
        self.types * self.heads * 4 + 4 + 6
    }

    pub fn z(&self) -> usize {
        0
    }

    pub fn relation_w(&self, r: usize) -> usize {
        1 + r
    }

    fn layer_base(&self, l: usize) -> usize {
        1 + self.relations + l * self.per_layer()
    }

    fn qk_base(&self, l: usize, t: usize, h: usize) -> usize {
        self.layer_base(l) + (t * self.heads + h) * 4
    }

    pub fn query_w(&self, l: usize, t: usize, h: usize) -> usize {
        self.qk_base(l, t, h)
    }

    pub fn query_b(&self, l: usize, t: usize, h: usize) -> usize {
        self.qk_base(l, t, h) + 1
    }

    pub fn key_w(&self, l: usize, t: usize, h: usize) -> usize {
        self.qk_base(l, t, h) + 2
    }

    pub fn key_b(&self, l: usize, t: usize, h: usize) -> usize {
        self.qk_base(l, t, h) + 3
    }

    fn shared_base(&self, l: usize) -> usize {
        self.layer_base(l) + self.types * self.heads * 4
    }

    pub fn w1(&self, l: usize) -> usize {
        self.shared_base(l)
    }

    pub fn b1(&self, l: usize) -> usize {
        self.shared_base(l) + 1
    }

    pub fn w2(&self, l: usize) -> usize {
        self.shared_base(l) + 2
    }

    pub fn b2(&self, l: usize) -> usize {
        self.shared_base(l) + 3
    }

    pub fn gru(&self, l: usize, which: usize) -> usize {
        debug_assert!(which < 6);
        self.shared_base(l) + 4 + which
    }

    pub fn alpha(&self) -> usize {
        self.total() - 1
    }

    pub fn total(&self) -> usize {
        1 + self.relations + self.depth * self.per_layer() + 1
    }

    /// Every parameter in index order: `(name, rows, cols, kind)`.
    pub fn manifest(
        &self,
        type_names: &[String],
        relation_names: &[String],
    ) -> Vec<(String, usize, usize, ParamKind)> {
        assert_eq!(type_names.len(), self.types);
        assert_eq!(relation_names.len(), self.relations);
        let d = self.dim;
        let head_dim = d / self.heads;
        let mut out = Vec::with_capacity(self.total());
        out.push(("embed/Z".to_string(), self.nodes, d, ParamKind::Weight));
        for name in relation_names {
            out.push((format!("relation/{name}/W"), 2 * d, d, ParamKind::Weight));
        }
        for l in 0..self.depth {
            // Parameter names use 1-based layer numbers: layer k produces
            // the length-k context vectors.
            let ln = l + 1;
            for t in type_names {
                for h in 0..self.heads {
                    let base = format!("layer{ln}/attn/{t}/head{h}");
                    out.push((format!("{base}/QW"), d, d, ParamKind::Weight));
                    out.push((format!("{base}/Qb"), 1, d, ParamKind::Bias));
                    out.push((format!("{base}/KW"), d, d, ParamKind::Weight));
                    out.push((format!("{base}/Kb"), 1, d, ParamKind::Bias));
                }
            }
            out.push((format!("layer{ln}/W1"), d, head_dim, ParamKind::Weight));
            out.push((format!("layer{ln}/B1"), 1, head_dim, ParamKind::Bias));
            out.push((format!("layer{ln}/W2"), d, d, ParamKind::Weight));
            out.push((format!("layer{ln}/B2"), 1, d, ParamKind::Bias));
            for (gate, kind) in
                [("Wz", GRU_WZ), ("bz", GRU_BZ), ("Wr", GRU_WR), ("br", GRU_BR), ("Wh", GRU_WH), ("bh", GRU_BH)]
            {
                let (rows, param_kind) = if gate.starts_with('W') {
                    (2 * d, ParamKind::Weight)
                } else {
                    (1, ParamKind::Bias)
                };
                debug_assert_eq!(out.len(), self.gru(l, kind));
                out.push((format!("layer{ln}/gru/{gate}"), rows, d, param_kind));
            }
        }
        out.push(("combine/alpha".to_string(), self.types, self.depth, ParamKind::LengthScores));
        debug_assert_eq!(out.len(), self.total());
        out
    }
}

/// A trained (or freshly initialised) relevance model: every parameter
/// matrix plus the type/relation vocabularies it was built against.
#[derive(Clone)]
pub struct GsimModel {
    pub(crate) dim: usize,
    pub(crate) depth: usize,
    pub(crate) heads: usize,
    pub(crate) node_dropout: f64,
    pub(crate) type_names: Vec<String>,
    pub(crate) relation_names: Vec<String>,
    pub(crate) node_count: usize,
    pub(crate) params: Vec<Matrix>,
}

impl GsimModel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn heads(&self) -> usize {
        self.heads
    }

    pub fn node_dropout(&self) -> f64 {
        self.node_dropout
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn type_names(&self) -> &[String] {
        &self.type_names
    }

    pub fn relation_names(&self) -> &[String] {
        &self.relation_names
    }

    pub(crate) fn layout(&self) -> ParamLayout {
        ParamLayout {
            dim: self.dim,
            depth: self.depth,
            heads: self.heads,
            types: self.type_names.len(),
            relations: self.relation_names.len(),
            nodes: self.node_count,
        }
    }

    pub(crate) fn params(&self) -> &[Matrix] {
        &self.params
    }

    pub(crate) fn params_mut(&mut self) -> &mut [Matrix] {
        &mut self.params
    }

    /// Parameter matrices with their stable names, in storage order.
    pub fn named_params(&self) -> Vec<(String, &Matrix)> {
        self.layout()
            .manifest(&self.type_names, &self.relation_names)
            .into_iter()
            .map(|(name, ..)| name)
            .zip(self.params.iter())
            .map(|(name, m)| (name, m))
            .collect()
    }

    /// Total number of stored parameter scalars. Everything except the
    /// node embedding table is independent of the graph size, so memory is
    /// linear in `|V|` and does not grow with the edge count.
    pub fn parameter_entries(&self) -> usize {
        self.params.iter().map(|m| m.rows() * m.cols()).sum()
    }

    /// Checks that the graph has exactly the node count and type/relation
    /// vocabularies this model was built against.
    pub fn matches_graph(&self, g: &HeteroGraph) -> Result<(), ModelError> {
        let mismatch = |message: String| Err(ModelError::GraphMismatch { message });
        if g.node_count() != self.node_count {
            return mismatch(format!(
                "model was built for {} nodes, graph has {}",
                self.node_count,
                g.node_count()
            ));
        }
        let graph_types: Vec<&str> =
            (0..g.type_count()).map(|t| g.type_name(crate::hetgraph::TypeId(t))).collect();
        if graph_types != self.type_names.iter().map(String::as_str).collect::<Vec<_>>() {
            return mismatch(format!(
                "model types [{}] do not match graph types [{}]",
                self.type_names.join(", "),
                graph_types.join(", ")
            ));
        }
        let graph_relations: Vec<&str> = g.relations().map(|(_, info)| info.name.as_str()).collect();
        if graph_relations != self.relation_names.iter().map(String::as_str).collect::<Vec<_>>() {
            return mismatch(format!(
                "model relations [{}] do not match graph relations [{}]",
                self.relation_names.join(", "),
                graph_relations.join(", ")
            ));
        }
        Ok(())
    }

    /// Checks the dimensions a caller explicitly requested against what the
    /// model was trained with.
    pub fn matches_dims(
        &self,
        dim: Option<usize>,
        depth: Option<usize>,
        heads: Option<usize>,
    ) -> Result<(), ModelError> {
        let pairs =
            [("dim", dim, self.dim), ("depth", depth, self.depth), ("heads", heads, self.heads)];
        for (what, requested, actual) in pairs {
            if let Some(r) = requested {
                if r != actual {
                    return Err(ModelError::InvalidConfig {
                        message: format!("model file has {what} = {actual}, but {what} = {r} was requested"),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Builds a model for `g` with Xavier-uniform weights, zero biases, and
/// length scores fixed at one, all drawn from `cfg.seed`. The same seed
/// always produces the same model.
pub fn init_model(g: &HeteroGraph, cfg: &TrainConfig) -> Result<GsimModel, ModelError> {
    cfg.validate()?;
    if g.node_count() == 0 {
        return Err(ModelError::InvalidConfig { message: "graph has no nodes".into() });
    }
    let type_names: Vec<String> =
        (0..g.type_count()).map(|t| g.type_name(crate::hetgraph::TypeId(t)).to_string()).collect();
    let relation_names: Vec<String> =
        g.relations().map(|(_, info)| info.name.clone()).collect();
    let layout = ParamLayout {
        dim: cfg.dim,
        depth: cfg.depth,
        heads: cfg.heads,
        types: type_names.len(),
        relations: relation_names.len(),
        nodes: g.node_count(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let params = layout
        .manifest(&type_names, &relation_names)
        .into_iter()
        .map(|(_, rows, cols, kind)| match kind {
            ParamKind::Weight => Matrix::xavier_uniform(rows, cols, &mut rng),
            ParamKind::Bias => Matrix::zeros(rows, cols),
            ParamKind::LengthScores => Matrix::filled(rows, cols, 1.0),
        })
        .collect();
    Ok(GsimModel {
        dim: cfg.dim,
        depth: cfg.depth,
        heads: cfg.heads,
        node_dropout: cfg.node_dropout,
        type_names,
        relation_names,
        node_count: g.node_count(),
        params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hetgraph::HeteroGraph;

    fn toy_graph(extra_edges: usize) -> HeteroGraph {
        let mut b = HeteroGraph::builder(true);
        for i in 0..4 {
            b.add_node(&format!("a{i}"), "A").unwrap();
            b.add_node(&format!("p{i}"), "P").unwrap();
        }
        for i in 0..4 {
            b.add_edge(&format!("a{i}"), "writes", &format!("p{i}")).unwrap();
        }
        for e in 0..extra_edges {
            b.add_edge(&format!("a{}", e % 4), "writes", &format!("p{}", (e + 1) % 4)).unwrap();
        }
        b.finish()
    }

    fn small_config() -> TrainConfig {
        TrainConfig { dim: 8, depth: 2, heads: 2, ..TrainConfig::default() }
    }

    #[test]
    fn defaults_are_the_documented_ones() {
        let cfg = TrainConfig::default();
        assert_eq!(cfg.dim, 128);
        assert_eq!(cfg.depth, 4);
        assert_eq!(cfg.heads, 2);
        assert_eq!(cfg.node_dropout, 0.3);
        assert_eq!(cfg.learning_rate, 0.05);
        assert_eq!(cfg.max_epochs, 200);
        assert_eq!(cfg.loss_balance, (1.0, 1.0));
        cfg.validate().unwrap();
    }

    #[test]
    fn invalid_configurations_are_rejected() {
        let bad = [
            TrainConfig { dim: 0, ..TrainConfig::default() },
            TrainConfig { depth: 0, ..TrainConfig::default() },
            TrainConfig { heads: 3, dim: 128, ..TrainConfig::default() },
            TrainConfig { node_dropout: 1.0, ..TrainConfig::default() },
            TrainConfig { node_dropout: -0.1, ..TrainConfig::default() },
            TrainConfig { learning_rate: 0.0, ..TrainConfig::default() },
            TrainConfig { max_epochs: 0, ..TrainConfig::default() },
            TrainConfig { patience: Some(0), ..TrainConfig::default() },
            TrainConfig { loss_balance: (0.0, 0.0), ..TrainConfig::default() },
            TrainConfig { loss_balance: (-1.0, 1.0), ..TrainConfig::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "accepted {cfg:?}");
        }
    }

    #[test]
    fn manifest_names_are_unique_and_match_index_helpers() {
        let g = toy_graph(0);
        let model = init_model(&g, &small_config()).unwrap();
        let layout = model.layout();
        let manifest = layout.manifest(&model.type_names, &model.relation_names);
        assert_eq!(manifest.len(), layout.total());
        assert_eq!(model.params.len(), layout.total());

        let mut names: Vec<&str> = manifest.iter().map(|(n, ..)| n.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), manifest.len(), "duplicate parameter names");

        assert_eq!(manifest[layout.z()].0, "embed/Z");
        assert_eq!(manifest[layout.relation_w(1)].0, "relation/writes^-1/W");
        assert_eq!(manifest[layout.query_w(1, 0, 1)].0, "layer2/attn/A/head1/QW");
        assert_eq!(manifest[layout.key_b(0, 1, 0)].0, "layer1/attn/P/head0/Kb");
        assert_eq!(manifest[layout.w1(1)].0, "layer2/W1");
        assert_eq!(manifest[layout.b2(0)].0, "layer1/B2");
        assert_eq!(manifest[layout.gru(1, GRU_BH)].0, "layer2/gru/bh");
        assert_eq!(manifest[layout.alpha()].0, "combine/alpha");
    }

    #[test]
    fn initialisation_is_deterministic_and_seed_sensitive() {
        let g = toy_graph(0);
        let cfg = small_config();
        let m1 = init_model(&g, &cfg).unwrap();
        let m2 = init_model(&g, &cfg).unwrap();
        for (a, b) in m1.params.iter().zip(&m2.params) {
            assert_eq!(a.data(), b.data());
        }
        let other = init_model(&g, &TrainConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(m1.params[0].data(), other.params[0].data());
    }

    #[test]
    fn length_scores_start_at_one_and_biases_at_zero() {
        let g = toy_graph(0);
        let model = init_model(&g, &small_config()).unwrap();
        let layout = model.layout();
        assert!(model.params[layout.alpha()].data().iter().all(|&x| x == 1.0));
        assert!(model.params[layout.b1(0)].data().iter().all(|&x| x == 0.0));
        assert!(model.params[layout.query_b(0, 0, 0)].data().iter().all(|&x| x == 0.0));
        assert_eq!(model.params[layout.z()].shape(), (g.node_count(), 8));
        assert_eq!(model.params[layout.relation_w(0)].shape(), (16, 8));
        assert_eq!(model.params[layout.w1(0)].shape(), (8, 4));
        assert_eq!(model.params[layout.alpha()].shape(), (2, 2));
    }

    #[test]
    fn parameter_count_ignores_edge_count() {
        let sparse = toy_graph(0);
        let dense = toy_graph(12);
        assert!(dense.edge_count() > sparse.edge_count());
        let cfg = small_config();
        let a = init_model(&sparse, &cfg).unwrap();
        let b = init_model(&dense, &cfg).unwrap();
        assert_eq!(a.parameter_entries(), b.parameter_entries());
    }

    #[test]
    fn graph_mismatch_is_detected() {
        let g = toy_graph(0);
        let model = init_model(&g, &small_config()).unwrap();
        model.matches_graph(&g).unwrap();

        let mut b = HeteroGraph::builder(true);
        b.add_node("x", "A").unwrap();
        b.add_node("y", "P").unwrap();
        b.add_edge("x", "writes", "y").unwrap();
        let other = b.finish();
        assert!(model.matches_graph(&other).is_err());
    }

    #[test]
    fn explicit_dimension_requests_are_checked() {
        let g = toy_graph(0);
        let model = init_model(&g, &small_config()).unwrap();
        model.matches_dims(Some(8), Some(2), None).unwrap();
        model.matches_dims(None, None, None).unwrap();
        let err = model.matches_dims(None, Some(4), None).unwrap_err();
        assert!(err.to_string().contains("depth"), "{err}");
    }
}
