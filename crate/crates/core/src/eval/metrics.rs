//! External clustering quality measures against a labeled ground truth.

use std::collections::HashMap;

use super::{EvalError, Partition};
use crate::hetgraph::LabelTable;

/// Pairwise F-score, normalized mutual information, adjusted Rand index,
/// and purity of a predicted partition against ground-truth labels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClusteringMetrics {
    pub f_score: f64,
    pub nmi: f64,
    pub ari: f64,
    pub purity: f64,
}

/// Scores a partition against the labels, over the nodes that are both in
/// the partition and labeled. Labeled nodes outside the partition and
/// clustered nodes without labels are ignored; sharing no nodes at all is
/// an error.
pub fn clustering_metrics(
    pred: &Partition,
    truth: &LabelTable,
) -> Result<ClusteringMetrics, EvalError> {
    // Contingency counts: per (cluster, label) pair over the shared nodes.
    let mut table: HashMap<(usize, usize), u64> = HashMap::new();
    let mut cluster_sizes: HashMap<usize, u64> = HashMap::new();
    let mut label_sizes: HashMap<usize, u64> = HashMap::new();
    let mut total: u64 = 0;
    for (i, &node) in pred.node_index().iter().enumerate() {
        let Some(label) = truth.label_of(node) else { continue };
        let cluster = pred.assignment()[i];
        *table.entry((cluster, label.0)).or_insert(0) += 1;
        *cluster_sizes.entry(cluster).or_insert(0) += 1;
        *label_sizes.entry(label.0).or_insert(0) += 1;
        total += 1;
    }
    if total == 0 {
        return Err(EvalError::EmptyIntersection);
    }

    let pairs_together = |counts: &HashMap<usize, u64>| -> u64 {
        counts.values().map(|&c| c * (c - 1) / 2).sum()
    };
    let same_both: u64 = table.values().map(|&c| c * (c - 1) / 2).sum();
    let same_pred = pairs_together(&cluster_sizes);
    let same_truth = pairs_together(&label_sizes);

    // Pairwise F: precision and recall over node pairs placed together.
    let precision = if same_pred == 0 { 1.0 } else { same_both as f64 / same_pred as f64 };
    let recall = if same_truth == 0 { 1.0 } else { same_both as f64 / same_truth as f64 };
    let f_score =
        if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };

    // Mutual information via entropies (I = H(pred) + H(truth) - H(joint))
    // normalized by the arithmetic mean of the marginal entropies. Each
    // entropy sums over its counts in sorted order, so renaming clusters or
    // labels cannot move a result by even an ulp, and when the partitions
    // agree the joint entropy equals each marginal term for term, making
    // the ratio exactly one.
    let entropy = |mut sizes: Vec<u64>| -> f64 {
        sizes.sort_unstable();
        sizes
            .into_iter()
            .map(|c| {
                let p = c as f64 / total as f64;
                -p * p.ln()
            })
            .sum()
    };
    let h_pred = entropy(cluster_sizes.values().copied().collect());
    let h_truth = entropy(label_sizes.values().copied().collect());
    let h_joint = entropy(table.values().copied().collect());
    let mean_entropy = 0.5 * (h_pred + h_truth);
    let nmi = if mean_entropy == 0.0 {
        // Both sides are a single group: trivially identical partitions.
        1.0
    } else {
        (((h_pred + h_truth) - h_joint) / mean_entropy).clamp(0.0, 1.0)
    };

    // Adjusted Rand index. `index` and `max_index` coincide bit for bit
    // when the partitions agree, making the ratio exactly one.
    let index = same_both as f64;
    let expected = same_pred as f64 * same_truth as f64 / (total * (total - 1) / 2).max(1) as f64;
    let max_index = 0.5 * (same_pred + same_truth) as f64;
    let ari = if max_index - expected == 0.0 { 1.0 } else { (index - expected) / (max_index - expected) };

    // Purity: each cluster votes for its most common label.
    let mut majority: HashMap<usize, u64> = HashMap::new();
    for (&(cluster, _), &count) in &table {
        let best = majority.entry(cluster).or_insert(0);
        *best = (*best).max(count);
    }
    let purity = majority.values().sum::<u64>() as f64 / total as f64;

    Ok(ClusteringMetrics { f_score, nmi, ari, purity })
}
